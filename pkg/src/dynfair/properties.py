"""Executable fairness and incentive checks.

Every checker returns a :class:`PropertyReport`: pass/fail, the smallest
margin seen over all quantified cases, and on failure a concrete witness
that localizes the problem to users and an epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .allocator import EpochAllocation, EpochInput, allocate_epoch, check_bottleneck_optimality, resource_usage
from .engine import Trace, epoch_input
from .model import UNBOUNDED, Scenario, fair_share
from .strategy import DeviationOutcome, SearchConfig, search_best_deviation, search_overreport

ZERO = Fraction(0)


@dataclass
class PropertyReport:
    name: str
    passed: bool
    slack: Fraction | None = None
    witnesses: int = 0
    counterexample: dict | None = None
    details: dict = field(default_factory=dict)
    expected_fail: bool = False

    def __post_init__(self):
        if not self.passed and self.counterexample is None:
            raise ValueError("a failing report needs a counterexample")

    @property
    def ok(self) -> bool:
        """True when the outcome is the expected one."""
        return self.passed != self.expected_fail

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.expected_fail:
            status += " (expected)" if not self.passed else " (UNEXPECTED PASS)"
        slack = "" if self.slack is None else f" min slack {self.slack} (~{float(self.slack):.6g})"
        return f"{self.name}: {status}{slack} over {self.witnesses} cases"


def _min(a, b):
    return b if a is None or b < a else a


class RhoUndefined(ValueError):
    pass


def rho(scenario: Scenario, i: int) -> Fraction:
    """Largest weighted ratio advantage of user ``i`` over any other user."""
    best = ZERO
    for t in range(scenario.T):
        mine = scenario.truth[i][t].ratios
        for k in range(scenario.n):
            if k == i:
                continue
            theirs = scenario.truth[k][t].ratios
            for q, a in enumerate(mine):
                if a == 0:
                    continue
                if theirs[q] == 0:
                    raise RhoUndefined(f"rho undefined for zero-ratio instance (user {k}, resource {q}, epoch {t})")
                val = scenario.weights[i] * a / (scenario.weights[k] * theirs[q])
                if val > best:
                    best = val
    return best


def _user_classes(trace: Trace, scenario: Scenario) -> list:
    """Users grouped by (weight, true types, allocations); members are interchangeable."""
    groups: dict = {}
    for i in range(scenario.n):
        key = (scenario.weights[i], scenario.truth[i], tuple(trace.allocations[t][i] for t in range(trace.T)))
        groups.setdefault(key, []).append(i)
    return list(groups.values())


def check_envy_freeness(trace: Trace, scenario: Scenario) -> PropertyReport:
    """U_i^t >= sum_tau min(d_i, (w_i/w_j) r_j min_q a_jq/a_iq) for all i != j, t.

    Only meaningful for normalized ratio vectors; other scenarios get a
    vacuous pass marked not applicable.
    """
    if not scenario.normalized:
        return PropertyReport("envy_freeness", True, None, 0, None, {"applicable": False,
                              "reason": "ratio vectors are not normalized"})
    T = scenario.T
    classes = _user_classes(trace, scenario)
    slack, count, bad = None, 0, None
    for ci in classes:
        for cj in classes:
            if ci is cj and len(ci) < 2:
                continue
            i = ci[0]
            j = cj[1] if ci is cj else cj[0]
            pairs = len(ci) * (len(cj) - (1 if ci is cj else 0))
            scale = scenario.weights[i] / scenario.weights[j]
            envy = ZERO
            for t in range(T):
                ti, tj = scenario.truth[i][t], scenario.truth[j][t]
                conv = min(tj.ratios[q] / a for q, a in enumerate(ti.ratios) if a > 0)
                value = scale * trace.allocations[t][j] * conv
                if ti.demand is not UNBOUNDED:
                    value = min(ti.demand, value)
                envy += value
                margin = trace.cumulative_utility[t][i] - envy
                count += pairs
                slack = _min(slack, margin)
                if margin < 0 and bad is None:
                    bad = {"user": i, "envies": j, "epoch": t, "utility": trace.cumulative_utility[t][i], "envied_value": envy}
    return PropertyReport("envy_freeness", bad is None, slack, count, bad, {"applicable": True})


def check_sharing_incentives(trace: Trace, scenario: Scenario) -> PropertyReport:
    """U_i^t >= alpha * sum_tau min(d_i, R w_i / sum w) at every prefix t."""
    total = scenario.total_weight
    slack, count, bad = None, 0, None
    for i in range(scenario.n):
        bench = ZERO
        for t in range(scenario.T):
            share = fair_share(scenario.weights[i], total, scenario.capacities[t])
            d = scenario.truth[i][t].demand
            bench += share if d is UNBOUNDED else min(d, share)
            margin = trace.cumulative_utility[t][i] - scenario.alpha * bench
            count += 1
            slack = _min(slack, margin)
            if margin < 0 and bad is None:
                bad = {"user": i, "epoch": t, "utility": trace.cumulative_utility[t][i], "benchmark": scenario.alpha * bench}
    return PropertyReport("sharing_incentives", bad is None, slack, count, bad, {"alpha": scenario.alpha})


def pareto_violations(inp: EpochInput, alloc: EpochAllocation, tol: Fraction = ZERO) -> list:
    """Users that are below demand yet need no saturated resource."""
    r = alloc.allocations
    C = inp.capacity
    usage = resource_usage(r, inp.types, inp.m)
    out = []
    for i, ut in enumerate(inp.types):
        if ut.demand is not UNBOUNDED and r[i] >= ut.demand:
            continue
        if not any(a > 0 and usage[q] >= C - tol for q, a in enumerate(ut.ratios)):
            out.append(i)
    return out


def check_pareto(trace: Trace, scenario: Scenario, tol: Fraction = ZERO) -> PropertyReport:
    count, bad = 0, None
    R = [ZERO] * scenario.n
    for t in range(trace.T):
        inp = epoch_input(scenario, t, trace.reported[t], R)
        viol = pareto_violations(inp, trace.epochs[t], tol)
        count += scenario.n
        if viol and bad is None:
            bad = {"epoch": t, "users": viol, "allocations": trace.allocations[t]}
        R = list(trace.cumulative[t])
    return PropertyReport("pareto", bad is None, None, count, bad)


def check_certified(trace: Trace, scenario: Scenario) -> PropertyReport:
    """Bottleneck certificate for every epoch of a trace."""
    count, bad = 0, None
    R = [ZERO] * scenario.n
    for t in range(trace.T):
        inp = epoch_input(scenario, t, trace.reported[t], R)
        viol = check_bottleneck_optimality(inp, trace.epochs[t])
        count += 1
        if viol and bad is None:
            bad = {"epoch": t, "users": [v.user for v in viol], "allocations": trace.allocations[t]}
        R = list(trace.cumulative[t])
    return PropertyReport("bottleneck_certificate", bad is None, None, count, bad)


def check_no_overreport(scenario: Scenario, coalition: Iterable[int], config: SearchConfig | None = None,
                        expected_fail: bool = False) -> PropertyReport:
    """Best over-report-containing deviation never beats the best under-report."""
    config = config or SearchConfig()
    coalition = frozenset(coalition)
    under = search_best_deviation(scenario, coalition, config)
    over = search_overreport(scenario, coalition, config)
    details = {
        "under_best": under.max_ratio,
        "over_best": over.max_ratio if over else None,
        "under_mode": under.mode,
        "positive_ratios": scenario.has_positive_ratios(),
    }
    if over is None:
        return PropertyReport("no_overreport", True, None, 0, None, details, expected_fail)
    margin = under.key()[1] - over.key()[1]
    passed = under.key() >= over.key()
    cex = None
    if not passed:
        cex = {"coalition": sorted(coalition), "over_profile": over.profile.overrides, "over_ratio": over.max_ratio,
               "under_ratio": under.max_ratio, "epoch": over.max_epoch}
    return PropertyReport("no_overreport", passed, margin, over.profiles_evaluated + under.profiles_evaluated,
                          cex, details, expected_fail)


def more_less_hits(bar: EpochInput, hat: EpochInput) -> list:
    """Ordered pairs (i, j) matching the more/less hypothesis pattern.

    i gains in the hat outcome without asking for more, j loses without
    asking for less; i's hat ratios and j's bar ratios are all positive.
    """
    rb = allocate_epoch(bar).allocations
    rh = allocate_epoch(hat).allocations
    out = []
    for i in range(bar.n):
        if not (rb[i] < rh[i] and hat.types[i].demand <= bar.types[i].demand):
            continue
        if not all(a > 0 for a in hat.types[i].ratios):
            continue
        for j in range(bar.n):
            if j == i:
                continue
            if rb[j] > rh[j] and bar.types[j].demand <= hat.types[j].demand and all(a > 0 for a in bar.types[j].ratios):
                out.append((i, j, rb, rh))
    return out


def check_more_less(bar: EpochInput, hat: EpochInput) -> PropertyReport:
    """Whenever the pattern occurs: Rbar_i/w_i >= Rbar_j/w_j and Rhat_i/w_i <= Rhat_j/w_j."""
    hits = more_less_hits(bar, hat)
    slack, bad = None, None
    for i, j, rb, rh in hits:
        nb = bar.normalized(rb)
        nh = hat.normalized(rh)
        margin = min(nb[i] - nb[j], nh[j] - nh[i])
        slack = _min(slack, margin)
        if margin < 0 and bad is None:
            bad = {"i": i, "j": j, "bar_levels": (nb[i], nb[j]), "hat_levels": (nh[i], nh[j])}
    return PropertyReport("more_less", bad is None, slack, len(hits), bad, {"vacuous": not hits})


def applicable_bound(scenario: Scenario, coalition: Iterable[int]) -> tuple:
    """(bound, theorem label) for the deviation, or (None, reason)."""
    coalition = sorted(set(coalition))
    w = scenario.weights
    single = scenario.m == 1 and all(ut.ratios[0] == 1 for row in scenario.truth for ut in row)
    if single:
        if len(coalition) == 1:
            i = coalition[0]
            extra = max(w[i] / (w[i] + w[j]) for j in range(scenario.n) if j != i)
            label = "single resource, equal weights: 3/2" if len(set(w)) == 1 else "weighted single deviator: 1 + max w_i/(w_i+w_j)"
            return 1 + extra, label
        return Fraction(2), "weighted single resource coalition: 2"
    if len(coalition) == 1 and scenario.has_positive_ratios():
        i = coalition[0]
        return 1 + rho(scenario, i), "positive ratios: 1 + rho_i"
    return None, "no bound applies"


def check_upper_bounds(outcome: DeviationOutcome, scenario: Scenario) -> PropertyReport:
    bound, label = applicable_bound(scenario, outcome.coalition)
    details = {"bound": bound, "theorem": label, "gamma": outcome.max_ratio}
    if bound is None:
        return PropertyReport("upper_bound", True, None, 0, None, details)
    if outcome.zero_base_gain:
        cex = {"coalition": sorted(outcome.coalition), "reason": "gain with zero truthful utility",
               "profile": outcome.profile.overrides}
        return PropertyReport("upper_bound", False, None, 1, cex, details)
    if outcome.max_ratio is None:
        return PropertyReport("upper_bound", True, None, 0, None, details)
    margin = bound - outcome.max_ratio
    cex = None
    if margin < 0:
        cex = {"coalition": sorted(outcome.coalition), "epoch": outcome.max_epoch, "gamma": outcome.max_ratio,
               "bound": bound, "profile": outcome.profile.overrides}
    return PropertyReport("upper_bound", margin >= 0, margin, 1, cex, details)
