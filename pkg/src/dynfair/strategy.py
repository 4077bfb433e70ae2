"""Incentive ratios, deviation search and interval diagnostics.

A deviation is scored by its incentive ratio: the coalition's true
cumulative utility under the deviation divided by its truthful utility,
epoch by epoch; the score is the maximum over epochs where the truthful
utility is positive.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .engine import Trace, epoch_input, ratio_penalty, run, true_utility
from .allocator import allocate_epoch
from .model import UNBOUNDED, ReportProfile, Scenario, UserEpochType, validate_profile

ZERO = Fraction(0)
ONE = Fraction(1)


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DeviationOutcome:
    """Incentive ratio series of one deviation.

    ``ratios[t]`` is None where the coalition's truthful utility is zero.
    ``zero_base_gain`` is set when some epoch has zero truthful utility but
    positive deviated utility (an unbounded ratio).
    """

    coalition: frozenset
    ratios: tuple
    max_ratio: Fraction | None
    max_epoch: int | None
    truthful: Trace
    deviated: Trace
    zero_base_gain: bool = False
    profiles_evaluated: int = 1
    mode: str = "replay"

    @property
    def profile(self) -> ReportProfile:
        return self.deviated.profile

    @property
    def defined(self) -> bool:
        return self.max_ratio is not None

    def key(self) -> tuple:
        return (self.zero_base_gain, self.max_ratio if self.max_ratio is not None else ZERO)


def _ratio_series(truthful: Trace, deviated: Trace, coalition) -> tuple:
    series = []
    zero_gain = False
    for t in range(truthful.T):
        base = sum((truthful.cumulative_utility[t][i] for i in coalition), ZERO)
        dev = sum((deviated.cumulative_utility[t][i] for i in coalition), ZERO)
        if base > 0:
            series.append(dev / base)
        else:
            series.append(None)
            if dev > 0:
                zero_gain = True
    return tuple(series), zero_gain


def _outcome(truthful: Trace, deviated: Trace, coalition, evaluated=1, mode="replay") -> DeviationOutcome:
    series, zero_gain = _ratio_series(truthful, deviated, coalition)
    best, at = None, None
    for t, g in enumerate(series):
        if g is not None and (best is None or g > best):
            best, at = g, t
    return DeviationOutcome(frozenset(coalition), series, best, at, truthful, deviated, zero_gain, evaluated, mode)


def incentive_ratio(scenario: Scenario, profile: ReportProfile, truthful: Trace | None = None) -> DeviationOutcome:
    """Replay truthful and deviating reports and compare coalition utility."""
    if not profile.coalition:
        raise ValueError("coalition must be nonempty")
    validate_profile(profile, scenario)
    truthful = truthful or run(scenario)
    return _outcome(truthful, run(scenario, profile), profile.coalition)


# ratio perturbations keep the max ratio at 1
def _flatten(ratios):
    return tuple(ONE for _ in ratios)


def _halve(ratios):
    return tuple(a if a == 1 else a / 2 for a in ratios)


def _shift_dominant(ratios):
    # move the dominant role to the next resource, keeping the old one at 1/2
    m = len(ratios)
    dom = ratios.index(ONE)
    nxt = (dom + 1) % m
    out = list(ratios)
    out[dom] = Fraction(1, 2)
    out[nxt] = ONE
    return tuple(out)


PERTURBATIONS: dict = {"flatten": _flatten, "halve": _halve, "shift": _shift_dominant}


@dataclass(frozen=True)
class SearchConfig:
    """Grid and strategy for deviation searches.

    Demand multipliers scale the true demand; for an unbounded true demand
    they scale the epoch capacity instead (1 keeps it unbounded).
    """

    multipliers: tuple = (ZERO, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), ONE)
    over_multipliers: tuple = (Fraction(2), UNBOUNDED)
    perturbations: tuple = ("flatten", "halve")
    epochs: tuple | None = None
    restarts: int = 8
    seed: int = 0
    budget: int = 10**6
    mode: str = "auto"


def _demand_option(true_demand, mult, capacity):
    if mult is UNBOUNDED:
        return UNBOUNDED
    mult = Fraction(mult)
    if true_demand is UNBOUNDED:
        return UNBOUNDED if mult >= 1 else mult * capacity
    return mult * true_demand


def _is_over(truth: UserEpochType, rep: UserEpochType) -> bool:
    if rep.ratios != truth.ratios:
        return True
    return rep.demand > truth.demand


def report_options(scenario: Scenario, i: int, t: int, config: SearchConfig, over: bool) -> list:
    """Distinct reported types for one (user, epoch) cell, truthful first."""
    truth = scenario.truth[i][t]
    cap = scenario.capacities[t]
    demands = [_demand_option(truth.demand, x, cap) for x in config.multipliers]
    if over:
        demands += [_demand_option(truth.demand, x, cap) for x in config.over_multipliers]
    opts = [truth]
    for d in demands:
        opts.append(truth.with_demand(d))
    if over and scenario.m > 1:
        for name in config.perturbations:
            alt = PERTURBATIONS[name](truth.ratios)
            for d in demands:
                opts.append(UserEpochType(alt, d))
    seen, out = set(), []
    for o in opts:
        if o not in seen:
            seen.add(o)
            out.append(o)
    return out


def _cells(scenario: Scenario, coalition, config: SearchConfig):
    epochs = range(scenario.T) if config.epochs is None else sorted(set(config.epochs))
    return [(i, t) for t in epochs for i in sorted(coalition)]


def _profile_count(options: dict) -> int:
    total = 1
    for opts in options.values():
        total *= len(opts)
    return total


class _Searcher:
    """Depth-first enumeration sharing epoch prefixes between profiles."""

    def __init__(self, scenario, coalition, options, truthful, require_over):
        self.sc = scenario
        self.coalition = sorted(coalition)
        self.options = options
        self.truthful = truthful
        self.require_over = require_over
        self.best = None  # (key, choice tuple)
        self.evaluated = 0
        self.base = [sum((truthful.cumulative_utility[t][i] for i in self.coalition), ZERO) for t in range(scenario.T)]

    def search(self):
        self._dfs(0, [ZERO] * self.sc.n, ZERO, (False, None), False, ())
        return self.best

    def _dfs(self, t, R, U, score, any_over, choice):
        sc = self.sc
        if t == sc.T:
            if self.require_over and not any_over:
                return
            self.evaluated += 1
            key = (score[0], score[1] if score[1] is not None else ZERO)
            if self.best is None or key > self.best[0]:
                self.best = (key, choice)
            return
        cells = [(i, t) for i in self.coalition]
        per_cell = [self.options.get(c, [sc.truth[c[0]][t]]) for c in cells]
        for combo in itertools.product(*per_cell):
            types = list(sc.epoch_types(t))
            over = any_over
            for (i, _), rep in zip(cells, combo):
                types[i] = rep
                if not over and _is_over(sc.truth[i][t], rep):
                    over = True
            ea = allocate_epoch(epoch_input(sc, t, types, R))
            du = ZERO
            for (i, _), rep in zip(cells, combo):
                truth = sc.truth[i][t]
                pen = ONE if rep.ratios == truth.ratios else ratio_penalty(truth.ratios, rep.ratios)
                du += true_utility(truth, ea.allocations[i], pen)
            U2 = U + du
            zero_gain, best = score
            if self.base[t] > 0:
                g = U2 / self.base[t]
                if best is None or g > best:
                    best = g
            elif U2 > 0:
                zero_gain = True
            R2 = [a + b for a, b in zip(R, ea.allocations)]
            picked = tuple(rep for (_, _), rep in zip(cells, combo))
            self._dfs(t + 1, R2, U2, (zero_gain, best), over, choice + ((t, picked),))


def _choice_to_profile(scenario, coalition, choice) -> ReportProfile:
    overrides = {}
    cs = sorted(coalition)
    for t, picked in choice:
        for i, rep in zip(cs, picked):
            if rep != scenario.truth[i][t]:
                overrides[(i, t)] = rep
    return ReportProfile(frozenset(coalition), overrides)


def _random_search(scenario, coalition, options, truthful, config, require_over) -> tuple:
    rng = random.Random(config.seed)
    cells = sorted(options, key=lambda c: (c[1], c[0]))
    evaluated = 0
    best = None

    def score(assign):
        nonlocal evaluated
        if require_over and not any(_is_over(scenario.truth[i][t], assign[(i, t)]) for (i, t) in cells):
            return None
        prof = ReportProfile(frozenset(coalition), {c: o for c, o in assign.items() if o != scenario.truth[c[0]][c[1]]})
        evaluated += 1
        return _outcome(truthful, run(scenario, prof), coalition)

    for _ in range(max(1, config.restarts)):
        assign = {c: rng.choice(options[c]) for c in cells}
        cur = score(assign)
        improved = True
        while improved:
            improved = False
            for c in cells:
                for o in options[c]:
                    if o == assign[c]:
                        continue
                    trial = dict(assign)
                    trial[c] = o
                    out = score(trial)
                    if out is not None and (cur is None or out.key() > cur.key()):
                        assign, cur, improved = trial, out, True
        if cur is not None and (best is None or cur.key() > best.key()):
            best = cur
    return best, evaluated


def _search(scenario, coalition, config: SearchConfig, over: bool) -> DeviationOutcome | None:
    coalition = frozenset(coalition)
    if not coalition:
        raise ValueError("coalition must be nonempty")
    truthful = run(scenario)
    options = {c: report_options(scenario, c[0], c[1], config, over) for c in _cells(scenario, coalition, config)}
    count = _profile_count(options)
    mode = config.mode
    if mode == "auto":
        mode = "exhaustive" if count <= config.budget else "random"
    if mode == "exhaustive":
        if count > config.budget:
            raise SearchBudgetExceeded(f"{count} profiles exceed the exhaustive budget {config.budget}")
        s = _Searcher(scenario, coalition, options, truthful, over)
        found = s.search()
        if found is None:
            return None
        prof = _choice_to_profile(scenario, coalition, found[1])
        return _outcome(truthful, run(scenario, prof), coalition, s.evaluated, "exhaustive")
    if mode == "random":
        best, evaluated = _random_search(scenario, coalition, options, truthful, config, over)
        if best is None:
            return None
        return _outcome(best.truthful, best.deviated, coalition, evaluated, "random")
    raise ValueError(f"unknown search mode {config.mode!r}")


def search_best_deviation(scenario: Scenario, coalition: Iterable[int], config: SearchConfig | None = None) -> DeviationOutcome:
    """Best under-report-only deviation on the multiplier grid."""
    return _search(scenario, coalition, config or SearchConfig(), over=False)


def search_overreport(scenario: Scenario, coalition: Iterable[int], config: SearchConfig | None = None) -> DeviationOutcome | None:
    """Best deviation containing an over-report or a misreported ratio vector.

    Returns None when no such profile exists (e.g. every cell has zero
    true demand and one resource).
    """
    return _search(scenario, coalition, config or SearchConfig(), over=True)


@dataclass(frozen=True)
class IntervalAnalysis:
    """Where the deviator is ahead in cumulative allocation.

    ``starts[l]`` is the epoch the deviator moves ahead, ``ends[l]`` the
    first later epoch she falls behind (absent for a final open interval),
    ``best_epochs[l]``/``best_ratios[l]`` the epoch in ``[s, e)`` maximizing
    R_hat/R.  ``f[t] = min((r - r_hat)^+, (R - R_hat)^+)``.  Epochs 0-based.
    """

    user: int
    starts: tuple
    ends: tuple
    best_epochs: tuple
    best_ratios: tuple
    f: tuple
    diffs: tuple = field(default=())

    @property
    def open_last(self) -> bool:
        return len(self.ends) < len(self.starts)

    def growth(self) -> tuple:
        """Diagnostic t_l / (s_l + 1) per interval (not asserted)."""
        return tuple(Fraction(b + 1, s + 1) for b, s in zip(self.best_epochs, self.starts))


def interval_analysis(truthful: Trace, deviated: Trace, user: int) -> IntervalAnalysis:
    T = truthful.T
    diffs = [deviated.cumulative[t][user] - truthful.cumulative[t][user] for t in range(T)]
    starts, ends = [], []
    prev = ZERO
    looking_for_start = True
    for t, d in enumerate(diffs):
        if looking_for_start and prev <= 0 < d:
            starts.append(t)
            looking_for_start = False
        elif not looking_for_start and prev >= 0 > d:
            ends.append(t)
            looking_for_start = True
        prev = d
    seq = []
    for s, e in itertools.zip_longest(starts, ends):
        seq += [s] if e is None else [s, e]
    if any(a >= b for a, b in zip(seq, seq[1:])):
        raise AssertionError(f"interval times not strictly increasing: {seq}")

    best_epochs, best_ratios = [], []
    for idx, s in enumerate(starts):
        stop = ends[idx] if idx < len(ends) else T
        best_t, best_g = None, None
        for t in range(s, stop):
            R = truthful.cumulative[t][user]
            if R > 0:
                g = deviated.cumulative[t][user] / R
                if best_g is None or g > best_g:
                    best_t, best_g = t, g
        best_epochs.append(best_t)
        best_ratios.append(best_g)

    f = []
    for t in range(T):
        r, rh = truthful.allocations[t][user], deviated.allocations[t][user]
        R, Rh = truthful.cumulative[t][user], deviated.cumulative[t][user]
        f.append(min(max(r - rh, ZERO), max(R - Rh, ZERO)))
    return IntervalAnalysis(user, tuple(starts), tuple(ends), tuple(best_epochs), tuple(best_ratios), tuple(f), tuple(diffs))
