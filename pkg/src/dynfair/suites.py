"""Named batches of property checks shared by the CLI and the test suite."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .engine import run
from .instances import (
    GeneratedInstance,
    RandomConfig,
    gen_example_10_9,
    gen_multi_lower,
    gen_sqrt2,
    gen_two_user_sketch,
    gen_zero_ratio_overreport,
    random_scenario,
)
from .model import Scenario
from .properties import (
    PropertyReport,
    check_certified,
    check_envy_freeness,
    check_no_overreport,
    check_pareto,
    check_sharing_incentives,
    check_upper_bounds,
)
from .strategy import SearchConfig, incentive_ratio, search_best_deviation

F = Fraction

SINGLE_EQUAL = RandomConfig(n=(2, 4), m=(1, 1), T=(1, 4))
MULTI_POSITIVE = RandomConfig(n=(2, 4), m=(2, 3), T=(1, 3))
WEIGHTED_SINGLE = RandomConfig(n=(2, 4), m=(1, 1), T=(1, 3), weights=(F(1), F(2), F(3)))

# the coalition search enumerates two users at once, so it uses a coarser grid
COALITION_GRID = SearchConfig(multipliers=(F(0), F(1, 2), F(1)))
FAMILIES = ("single-equal", "multi-positive", "weighted-coalition")


@dataclass
class CaseResult:
    case: str
    reports: list = field(default_factory=list)
    gamma: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)


@dataclass
class SuiteResult:
    name: str
    cases: list
    config: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.cases)

    def failures(self) -> list:
        return [(c.case, r) for c in self.cases for r in c.reports if not r.ok]

    def expected_failures(self) -> list:
        return [(c.case, r) for c in self.cases for r in c.reports if r.expected_fail and not r.passed]

    def counts(self) -> dict:
        out: dict = {}
        for c in self.cases:
            for r in c.reports:
                slot = out.setdefault(r.name, {"pass": 0, "fail": 0, "expected_fail": 0, "min_slack": None})
                if r.expected_fail and not r.passed:
                    slot["expected_fail"] += 1
                elif r.ok:
                    slot["pass"] += 1
                else:
                    slot["fail"] += 1
                if r.slack is not None and (slot["min_slack"] is None or r.slack < slot["min_slack"]):
                    slot["min_slack"] = r.slack
        return out


def trace_checks(scenario: Scenario, truthful=None, deviated=None) -> list:
    truthful = truthful or run(scenario)
    reports = [
        check_envy_freeness(truthful, scenario),
        check_sharing_incentives(truthful, scenario),
        check_pareto(truthful, scenario),
        check_certified(truthful, scenario),
    ]
    if deviated is not None:
        reports.append(_rename(check_pareto(deviated, scenario), "pareto_deviated"))
        reports.append(_rename(check_certified(deviated, scenario), "bottleneck_certificate_deviated"))
    return reports


def _rename(rep: PropertyReport, name: str) -> PropertyReport:
    rep.name = name
    return rep


def _exact_match(name: str, got, want) -> PropertyReport:
    ok = got == want
    cex = None if ok else {"replayed": got, "predicted": want}
    slack = None if got is None or want is None else -abs(got - want)
    return PropertyReport(name, ok, slack, 1, cex, {"replayed": got, "predicted": want})


def instance_case(inst: GeneratedInstance, expect_exact: bool = True) -> CaseResult:
    sc = inst.scenario
    outcome = incentive_ratio(sc, inst.deviation)
    res = CaseResult(f"{inst.name} {_label(inst.params)}".strip())
    res.gamma = {"replayed": outcome.max_ratio, "predicted": inst.predicted_ratio, "epoch": outcome.max_epoch}
    if expect_exact:
        res.reports.append(_exact_match("replay_matches_prediction", outcome.max_ratio, inst.predicted_ratio))
    res.reports += trace_checks(sc, outcome.truthful, outcome.deviated)
    res.reports.append(check_upper_bounds(outcome, sc))
    return res


def paper_instances() -> list:
    """The constructions reproduced by ``check --suite paper-tables``."""
    return [
        gen_example_10_9(),
        gen_sqrt2(2, 2),
        gen_sqrt2(5, 5),
        gen_sqrt2(10, 10),
        gen_sqrt2(25, 25),
        gen_multi_lower(F(1, 2), F(1, 1000), 1, 1000, 2000),
        gen_multi_lower(F(1, 4), F(1, 1000), 2, 1000, 1333),
        gen_zero_ratio_overreport(10),
        gen_two_user_sketch(F(1, 2), F(1, 1000)),
    ]


def paper_tables() -> SuiteResult:
    return SuiteResult("paper-tables", [instance_case(inst) for inst in paper_instances()])


def _label(params: dict) -> str:
    keys = [k for k in ("m", "k", "n", "eps", "delta", "w", "n1", "n2") if k in params]
    return " ".join(f"{k}={params[k]}" for k in keys)


ZERO_RATIO_SEARCH = SearchConfig(epochs=(0, 1))


def zero_ratio_case(n: int = 10) -> CaseResult:
    inst = gen_zero_ratio_overreport(n)
    res = CaseResult(f"zero-ratio n={n}")
    rep = check_no_overreport(inst.scenario, {0}, ZERO_RATIO_SEARCH, expected_fail=True)
    res.reports.append(rep)
    outcome = incentive_ratio(inst.scenario, inst.deviation)
    bound = inst.params["bound"]
    ok = outcome.max_ratio is not None and outcome.max_ratio >= bound
    res.reports.append(PropertyReport(
        "overreport_factor_at_least_(m-2)/2", ok,
        None if outcome.max_ratio is None else outcome.max_ratio - bound, 1,
        None if ok else {"gamma": outcome.max_ratio, "bound": bound},
    ))
    res.gamma = {"over_best": rep.details["over_best"], "under_best": rep.details["under_best"],
                 "replayed": outcome.max_ratio}
    return res


def zero_ratio_suite() -> SuiteResult:
    return SuiteResult("zero-ratio", [zero_ratio_case(10)])


def family_case(family: str, seed: int, overreport: bool = True) -> CaseResult:
    """One randomized scenario with its search-based and trace checks."""
    if family == "single-equal":
        sc = random_scenario(SINGLE_EQUAL, seed)
        searches = [({0}, SearchConfig())]
    elif family == "multi-positive":
        sc = random_scenario(MULTI_POSITIVE, seed)
        searches = [({0}, SearchConfig())]
    elif family == "weighted-coalition":
        sc = random_scenario(WEIGHTED_SINGLE, seed)
        searches = [({0, 1}, COALITION_GRID), ({0}, SearchConfig())]
    else:
        raise ValueError(f"unknown family {family!r}")
    res = CaseResult(f"{family} seed={seed}")
    res.reports += trace_checks(sc)
    for coalition, cfg in searches:
        outcome = search_best_deviation(sc, coalition, cfg)
        rep = check_upper_bounds(outcome, sc)
        rep.details["coalition"] = sorted(coalition)
        rep.details["mode"] = outcome.mode
        res.reports.append(rep)
        res.gamma[len(coalition)] = outcome.max_ratio
        res.reports += [_rename(check_pareto(outcome.deviated, sc), "pareto_deviated"),
                        _rename(check_certified(outcome.deviated, sc), "bottleneck_certificate_deviated")]
        if overreport and len(coalition) == 1:
            res.reports.append(check_no_overreport(sc, coalition, cfg))
    return res


def _family_job(args):
    return family_case(*args)


def worker_count() -> int:
    raw = os.environ.get("FAIRSHARE_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def random_suite(seeds: int, base_seed: int = 0, workers: int | None = None) -> SuiteResult:
    """``seeds`` scenarios, rotating through the three families."""
    jobs = [(FAMILIES[s % len(FAMILIES)], base_seed + s) for s in range(seeds)]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cases = list(pool.map(_family_job, jobs, chunksize=8))
    else:
        cases = [family_case(*j) for j in jobs]
    return SuiteResult("random", cases, {"seeds": seeds, "base_seed": base_seed, "workers": workers})


SUITES = ("paper-tables", "random", "zero-ratio")
