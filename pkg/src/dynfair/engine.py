"""Replay a scenario epoch by epoch under truthful or deviating reports.

The mechanism only sees reports: reported types and reported cumulative
allocations drive the allocator.  True types are used for utility only.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .allocator import EpochAllocation, EpochInput, allocate_epoch
from .model import UNBOUNDED, ReportProfile, Scenario, UserEpochType

ZERO = Fraction(0)


def ratio_penalty(true_ratios: Sequence[Fraction], reported_ratios: Sequence[Fraction]) -> Fraction:
    """min over the true support of reported/true ratio; 1 for a truthful report."""
    vals = [b / a for a, b in zip(true_ratios, reported_ratios) if a > 0]
    if not vals:
        return Fraction(1)
    return min(vals)


def true_utility(true_type: UserEpochType, allocation: Fraction, penalty: Fraction) -> Fraction:
    useful = allocation * penalty
    if true_type.demand is UNBOUNDED:
        return useful
    return min(true_type.demand, useful)


@dataclass(frozen=True)
class Trace:
    """Per-epoch outcome of one replay.  Rows are indexed ``[t][i]``, 0-based.

    ``cumulative[t]`` and ``cumulative_utility[t]`` include epoch ``t``.
    """

    allocations: tuple
    cumulative: tuple
    penalties: tuple
    utilities: tuple
    cumulative_utility: tuple
    reported: tuple
    epochs: tuple
    profile: ReportProfile = field(default_factory=ReportProfile)
    degenerate: frozenset = frozenset()

    @property
    def T(self) -> int:
        return len(self.allocations)

    @property
    def n(self) -> int:
        return len(self.allocations[0]) if self.allocations else 0

    def cumulative_before(self, t: int) -> tuple:
        if t == 0:
            return (ZERO,) * self.n
        return self.cumulative[t - 1]

    def final_utility(self, i: int) -> Fraction:
        return self.cumulative_utility[-1][i]


def epoch_input(scenario: Scenario, t: int, types: Sequence[UserEpochType], cumulative: Sequence[Fraction]) -> EpochInput:
    return EpochInput(tuple(cumulative), tuple(types), scenario.weights, scenario.alpha, scenario.capacities[t])


def step(scenario: Scenario, t: int, types, cumulative) -> EpochAllocation:
    return allocate_epoch(epoch_input(scenario, t, types, cumulative))


def run(scenario: Scenario, profile: ReportProfile | None = None) -> Trace:
    """Replay the whole game under ``profile`` (None or empty means truthful)."""
    profile = profile or ReportProfile()
    n = scenario.n
    R = [ZERO] * n
    U = [ZERO] * n
    rows_r, rows_R, rows_pen, rows_u, rows_U, rows_rep, epochs = [], [], [], [], [], [], []
    degenerate = set()
    for t in range(scenario.T):
        reported = tuple(profile.reported(scenario, i, t) for i in range(n))
        ea = step(scenario, t, reported, R)
        pen, u = [], []
        for i in range(n):
            truth = scenario.truth[i][t]
            p = ratio_penalty(truth.ratios, reported[i].ratios) if reported[i] is not truth else Fraction(1)
            if p == 0:
                degenerate.add((i, t))
            pen.append(p)
            u.append(true_utility(truth, ea.allocations[i], p))
        R = [a + b for a, b in zip(R, ea.allocations)]
        U = [a + b for a, b in zip(U, u)]
        rows_r.append(ea.allocations)
        rows_R.append(tuple(R))
        rows_pen.append(tuple(pen))
        rows_u.append(tuple(u))
        rows_U.append(tuple(U))
        rows_rep.append(reported)
        epochs.append(ea)
    return Trace(
        allocations=tuple(rows_r),
        cumulative=tuple(rows_R),
        penalties=tuple(rows_pen),
        utilities=tuple(rows_u),
        cumulative_utility=tuple(rows_U),
        reported=tuple(rows_rep),
        epochs=tuple(epochs),
        profile=profile,
        degenerate=frozenset(degenerate),
    )


def fmt_rational(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def fmt_decimal(x: Fraction) -> str:
    return f"{float(x):.12g}"


TRACE_COLUMNS = ("epoch", "user", "r", "R", "lambda_hat", "u", "U")


def trace_to_csv(trace: Trace) -> str:
    """CSV with every rational rendered both as p/q and as a decimal.

    Epochs and users are numbered from 1.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["epoch", "user"]
    for col in TRACE_COLUMNS[2:]:
        header += [col, f"{col}_decimal"]
    w.writerow(header)
    for t in range(trace.T):
        for i in range(trace.n):
            row = [t + 1, i + 1]
            for val in (
                trace.allocations[t][i],
                trace.cumulative[t][i],
                trace.penalties[t][i],
                trace.utilities[t][i],
                trace.cumulative_utility[t][i],
            ):
                row += [fmt_rational(val), fmt_decimal(val)]
            w.writerow(row)
    return buf.getvalue()
