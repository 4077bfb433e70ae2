"""Command-line interface: simulate, generate, deviate, check.

Users and epochs are numbered from 1 on the command line and in every
file; the library itself is 0-based.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .engine import fmt_decimal, fmt_rational, run, trace_to_csv
from .instances import (
    RandomConfig,
    gen_example_10_9,
    gen_multi_lower,
    gen_sqrt2,
    gen_two_user_sketch,
    gen_zero_ratio_overreport,
    random_scenario,
)
from .model import UNBOUNDED, ScenarioError, to_demand, to_fraction
from .properties import (
    PropertyReport,
    check_certified,
    check_envy_freeness,
    check_no_overreport,
    check_pareto,
    check_sharing_incentives,
    check_upper_bounds,
)
from .serialize import ParseError, dual, dumps_profile, dumps_scenario, enc, profile_to_dict, read_profile, read_scenario
from .strategy import SearchBudgetExceeded, SearchConfig, incentive_ratio, interval_analysis, search_best_deviation, search_overreport
from . import suites

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
GENERATORS = ("example-10-9", "sqrt2", "multi-lower", "zero-ratio", "two-user-sketch", "random")


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _grid(text: str) -> tuple:
    try:
        return tuple(to_demand(x) for x in text.split(",") if x.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from exc


def _users(text: str) -> tuple:
    try:
        users = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad user list {text!r}") from exc
    if not users or min(users) < 1:
        raise argparse.ArgumentTypeError("users are numbered from 1")
    return users


def _jsonable(obj):
    if isinstance(obj, PropertyReport):
        return {
            "name": obj.name,
            "passed": obj.passed,
            "expected_fail": obj.expected_fail,
            "slack": dual(obj.slack),
            "witnesses": obj.witnesses,
            "counterexample": _jsonable(obj.counterexample),
            "details": _jsonable(obj.details),
        }
    if isinstance(obj, Fraction) or obj is UNBOUNDED:
        return dual(obj)
    if isinstance(obj, dict):
        return {(f"{k[0] + 1}:{k[1] + 1}" if isinstance(k, tuple) else str(k)): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in items]
    if hasattr(obj, "ratios") and hasattr(obj, "demand"):
        return {"ratios": enc(obj.ratios), "demand": enc(obj.demand)}
    return obj


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _dump(data) -> str:
    return json.dumps(_jsonable(data), indent=1) + "\n"


def _emit(args, table_lines: list, payload: dict, csv_text: str | None = None) -> None:
    if args.format == "json":
        sys.stdout.write(_dump(payload))
    elif args.format == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        print("\n".join(table_lines))


def _run_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    for k, v in list(cfg.items()):
        if isinstance(v, Path):
            cfg[k] = str(v)
    cfg["seed"] = getattr(args, "seed", None)
    return cfg


def _search_config(args) -> SearchConfig:
    kw = {"seed": args.seed, "budget": args.exhaustive_budget, "mode": args.mode}
    if args.grid:
        kw["multipliers"] = args.grid
    if args.epochs:
        kw["epochs"] = tuple(t - 1 for t in args.epochs)
    return SearchConfig(**kw)


def _gamma_line(outcome) -> str:
    if outcome.zero_base_gain:
        return "gamma_max = unbounded (gain with zero truthful utility)"
    if outcome.max_ratio is None:
        return "gamma_max = undefined (zero truthful utility throughout)"
    return f"gamma_max = {fmt_rational(outcome.max_ratio)} at t={outcome.max_epoch + 1}"


def _gamma_csv(outcome) -> str:
    rows = ["t,gamma,gamma_decimal"]
    for t, g in enumerate(outcome.ratios):
        rows.append(f"{t + 1},{'' if g is None else fmt_rational(g)},{'' if g is None else fmt_decimal(g)}")
    return "\n".join(rows) + "\n"


def _coalition(args, scenario) -> frozenset:
    users = frozenset(u - 1 for u in args.coalition)
    if max(users) >= scenario.n:
        raise UsageError(f"coalition names user {max(users) + 1} but the scenario has {scenario.n} users")
    return users


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    sc = read_scenario(args.scenario)
    profile = read_profile(args.profile, sc) if args.profile else None
    truthful = run(sc)
    _write(args.out, "truthful.csv", trace_to_csv(truthful))
    lines = ["user  U_final  R_final"]
    final = []
    for i in range(sc.n):
        U, R = truthful.cumulative_utility[-1][i], truthful.cumulative[-1][i]
        final.append({"user": i + 1, "U": U, "R": R})
        lines.append(f"{i + 1:>4}  {fmt_rational(U):>7}  {fmt_rational(R):>7}")
    payload = {"config": _run_config(args), "truthful_final": final}
    csv_text = trace_to_csv(truthful)
    if profile is not None:
        outcome = incentive_ratio(sc, profile, truthful)
        _write(args.out, "deviated.csv", trace_to_csv(outcome.deviated))
        dev_final = []
        lines.append("deviated:")
        for i in range(sc.n):
            U, R = outcome.deviated.cumulative_utility[-1][i], outcome.deviated.cumulative[-1][i]
            dev_final.append({"user": i + 1, "U": U, "R": R})
            lines.append(f"{i + 1:>4}  {fmt_rational(U):>7}  {fmt_rational(R):>7}")
        lines.append(_gamma_line(outcome))
        payload.update(deviated_final=dev_final, gamma_series=list(outcome.ratios), gamma_max=outcome.max_ratio,
                       gamma_epoch=None if outcome.max_epoch is None else outcome.max_epoch + 1,
                       coalition=[i + 1 for i in sorted(outcome.coalition)])
        csv_text += "\n" + trace_to_csv(outcome.deviated)
    _write(args.out, "summary.json", _dump(payload))
    _emit(args, lines, payload, csv_text)
    return EXIT_OK


# -- generate ---------------------------------------------------------------

def cmd_generate(args) -> int:
    name = args.name
    if name == "example-10-9":
        inst = gen_example_10_9()
    elif name == "sqrt2":
        inst = gen_sqrt2(args.m or 25, args.k or 25)
    elif name == "multi-lower":
        inst = gen_multi_lower(args.eps or Fraction(1, 2), args.delta or Fraction(1, 1000), args.w or 1,
                               args.n1 or 1000, args.n2 or 2000, check_slack=not args.allow_small)
    elif name == "zero-ratio":
        inst = gen_zero_ratio_overreport(args.n or 10)
    elif name == "two-user-sketch":
        inst = gen_two_user_sketch(args.eps or Fraction(1, 2), args.delta or Fraction(1, 1000))
    else:
        cfg = RandomConfig(
            n=(args.n, args.n) if args.n else RandomConfig.n,
            m=(args.m, args.m) if args.m else RandomConfig.m,
            T=(args.T, args.T) if args.T else RandomConfig.T,
        )
        sc = random_scenario(cfg, args.seed)
        note = {"name": "random", "config": _run_config(args), "predicted_ratio": None}
        _write(args.out, "scenario.json", dumps_scenario(sc))
        _write(args.out, "note.json", _dump(note))
        _emit(args, [f"random scenario seed={args.seed}: n={sc.n} m={sc.m} T={sc.T}"], note)
        if args.out is None:
            sys.stdout.write(dumps_scenario(sc))
        return EXIT_OK
    pred = inst.predicted_ratio
    note = {"name": inst.name, "config": _run_config(args), "predicted_ratio": pred, "notes": inst.notes,
            "params": inst.params}
    _write(args.out, "scenario.json", dumps_scenario(inst.scenario))
    _write(args.out, "profile.json", dumps_profile(inst.deviation))
    _write(args.out, "note.json", _dump(note))
    lines = [f"{inst.name}: n={inst.scenario.n} m={inst.scenario.m} T={inst.scenario.T}",
             f"predicted ratio = {fmt_rational(pred)} (~{fmt_decimal(pred)})", inst.notes]
    _emit(args, lines, note)
    return EXIT_OK


# -- deviate ----------------------------------------------------------------

def cmd_deviate(args) -> int:
    sc = read_scenario(args.scenario)
    coalition = _coalition(args, sc)
    cfg = _search_config(args)
    best = search_best_deviation(sc, coalition, cfg)
    payload = {"config": _run_config(args), "coalition": [i + 1 for i in sorted(coalition)]}
    lines = [f"under-report search ({best.mode}, {best.profiles_evaluated} profiles): {_gamma_line(best)}"]
    payload["under_report"] = _outcome_dict(best)
    if args.over:
        over = search_overreport(sc, coalition, cfg)
        payload["over_report"] = None if over is None else _outcome_dict(over)
        lines.append("over-report search: " + ("no over-report possible" if over is None else _gamma_line(over)))
    if len(coalition) == 1:
        (user,) = coalition
        ia = interval_analysis(best.truthful, best.deviated, user)
        payload["intervals"] = {
            "starts": [s + 1 for s in ia.starts], "ends": [e + 1 for e in ia.ends],
            "best_epochs": [b + 1 for b in ia.best_epochs], "best_ratios": list(ia.best_ratios),
            "open_last": ia.open_last, "f": list(ia.f),
        }
        lines.append(f"intervals: starts={payload['intervals']['starts']} ends={payload['intervals']['ends']}")
    lines.append("best profile: " + json.dumps(profile_to_dict(best.profile)))
    _write(args.out, "deviation.json", _dump(payload))
    _write(args.out, "gamma.csv", _gamma_csv(best))
    _write(args.out, "best_profile.json", dumps_profile(best.profile))
    _emit(args, lines, payload, _gamma_csv(best))
    return EXIT_OK


def _outcome_dict(o) -> dict:
    return {
        "mode": o.mode,
        "profiles_evaluated": o.profiles_evaluated,
        "gamma_max": o.max_ratio,
        "gamma_epoch": None if o.max_epoch is None else o.max_epoch + 1,
        "zero_base_gain": o.zero_base_gain,
        "gamma_series": list(o.ratios),
        "profile": profile_to_dict(o.profile),
    }


# -- check ------------------------------------------------------------------

def _scenario_suite(args) -> suites.SuiteResult:
    sc = read_scenario(args.scenario)
    tol = args.tolerance
    truthful = run(sc)
    case = suites.CaseResult(str(args.scenario))
    case.reports += [check_envy_freeness(truthful, sc), check_sharing_incentives(truthful, sc),
                     check_pareto(truthful, sc, tol), check_certified(truthful, sc)]
    if args.coalition:
        coalition = _coalition(args, sc)
        cfg = _search_config(args)
        outcome = search_best_deviation(sc, coalition, cfg)
        case.reports.append(check_upper_bounds(outcome, sc))
        if len(coalition) == 1:
            case.reports.append(check_no_overreport(sc, coalition, cfg))
        case.gamma = {"under_best": outcome.max_ratio}
    return suites.SuiteResult("scenario", [case])


def cmd_check(args) -> int:
    if (args.suite is None) == (args.scenario is None):
        raise UsageError("give exactly one of --scenario or --suite")
    if args.scenario is not None:
        result = _scenario_suite(args)
    elif args.suite == "paper-tables":
        result = suites.paper_tables()
    elif args.suite == "zero-ratio":
        result = suites.zero_ratio_suite()
    else:
        result = suites.random_suite(args.seeds, args.seed)
    lines = [f"suite {result.name}: {len(result.cases)} cases"]
    for name, c in sorted(result.counts().items()):
        slack = "" if c["min_slack"] is None else f" min slack {fmt_decimal(c['min_slack'])}"
        lines.append(f"  {name}: {c['pass']} pass, {c['fail']} fail, {c['expected_fail']} expected fail{slack}")
    for case, rep in result.failures():
        lines.append(f"  FAILURE {case}: {rep.summary()} {_jsonable(rep.counterexample)}")
    for case, rep in result.expected_failures():
        lines.append(f"  expected failure {case}: {rep.summary()}")
    lines.append("OK" if result.ok else "FAILED")
    payload = {
        "config": _run_config(args),
        "suite": result.name,
        "ok": result.ok,
        "counts": result.counts(),
        "cases": [{"case": c.case, "gamma": _jsonable({str(k): v for k, v in c.gamma.items()}), "reports": c.reports}
                  for c in result.cases],
    }
    _write(args.out, "check.json", _dump(payload))
    _emit(args, lines, payload)
    return EXIT_OK if result.ok else EXIT_FAIL


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynfair", description="Dynamic weighted DRF simulator and incentive analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=0):
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--format", choices=("table", "csv", "json"), default="table")
        sp.add_argument("--seed", type=int, default=seed)

    def search_flags(sp):
        sp.add_argument("--coalition", type=_users, default=None, help="comma separated users, from 1")
        sp.add_argument("--grid", type=_grid, default=None, help="demand multipliers, e.g. 0,1/2,1")
        sp.add_argument("--epochs", type=_users, default=None, help="restrict search to these epochs (from 1)")
        sp.add_argument("--exhaustive-budget", type=int, default=10**6)
        sp.add_argument("--mode", choices=("auto", "exhaustive", "random"), default="auto")

    sp = sub.add_parser("simulate", help="replay a scenario, optionally with a deviation profile")
    sp.add_argument("--scenario", type=Path, required=True)
    sp.add_argument("--profile", type=Path, default=None)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("generate", help="write a constructed instance")
    sp.add_argument("name", choices=GENERATORS)
    for flag in ("--m", "--k", "--n", "--n1", "--n2", "--T"):
        sp.add_argument(flag, type=int, default=None)
    for flag in ("--eps", "--delta", "--w"):
        sp.add_argument(flag, type=_rational, default=None)
    sp.add_argument("--allow-small", action="store_true", help="skip the group-size slack check (multi-lower)")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("deviate", help="search for the best deviation of a coalition")
    sp.add_argument("--scenario", type=Path, required=True)
    sp.add_argument("--over", action="store_true", help="also search over-reports")
    search_flags(sp)
    common(sp)
    sp.set_defaults(func=cmd_deviate)

    sp = sub.add_parser("check", help="run property checks on a scenario or a named suite")
    sp.add_argument("--scenario", type=Path, default=None)
    sp.add_argument("--suite", choices=suites.SUITES, default=None)
    sp.add_argument("--seeds", type=int, default=60)
    sp.add_argument("--tolerance", type=_rational, default=Fraction(0))
    search_flags(sp)
    common(sp)
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "deviate" and not args.coalition:
        parser.error("deviate needs --coalition")
    try:
        return args.func(args)
    except (ParseError, ScenarioError, UsageError, SearchBudgetExceeded, ValueError) as exc:
        print(f"dynfair {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dynfair {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
