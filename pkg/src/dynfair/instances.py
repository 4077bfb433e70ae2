"""Generators for the known manipulation instances plus random scenarios.

Each generator returns the scenario, the manipulating report profile and
the ratio that manipulation is predicted to achieve, so a replay can be
checked against it exactly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import (
    UNBOUNDED,
    ReportProfile,
    Scenario,
    ScenarioError,
    UserEpochType,
    to_fraction,
    validate_profile,
    validate_scenario,
)

ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class GeneratedInstance:
    name: str
    scenario: Scenario
    deviation: ReportProfile
    predicted_ratio: Fraction | float
    notes: str = ""
    params: dict = field(default_factory=dict)


def _finish(name, scenario, deviation, predicted, notes, params) -> GeneratedInstance:
    validate_scenario(scenario)
    validate_profile(deviation, scenario)
    return GeneratedInstance(name, scenario, deviation, predicted, notes, params)


def _single(demand) -> UserEpochType:
    return UserEpochType((ONE,), demand)


def gen_example_10_9() -> GeneratedInstance:
    """Three users, one resource of 8 units, three epochs.

    User 0 gains a factor 10/9 by asking for nothing in the first epoch.
    """
    demands = [(8, 8, 8), (8, 0, 8), (0, 8, 0)]
    truth = [tuple(_single(Fraction(d)) for d in row) for row in demands]
    sc = Scenario(weights=(1, 1, 1), alpha=0, capacities=(8, 8, 8), truth=truth, positive_ratios=True)
    dev = ReportProfile({0}, {(0, 0): _single(ZERO)})
    return _finish(
        "example-10-9", sc, dev, Fraction(10, 9),
        "single resource, R=8, user 1 reports 0 in epoch 1; truthful total 9, deviated 10", {},
    )


def _solve_exact(a: list, b: list) -> list:
    """Gauss-Jordan elimination over the rationals."""
    n = len(a)
    rows = [list(a[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("singular linear system")
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [x / p for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                k = rows[r][col]
                rows[r] = [x - k * y for x, y in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


def sqrt2_sequence(m: int) -> list:
    """F_1..F_m normalized so that F_m + f_m/2 = 1, where f_i = F_i - F_{i-1}.

    For i < m: F_m - F_i + f_m/2 = (F_i + f_i) - (F_{i+1} + f_{i+1}).
    Unknown vector is F_1..F_m; returns [F_0=0, F_1, ..., F_m].
    """
    if m < 1:
        raise ValueError("m must be at least 1")

    def coef(terms):
        row = [ZERO] * m
        for idx, c in terms:
            if idx >= 1:
                row[idx - 1] += c
        return row

    def F(i, c=ONE):
        return [(i, c)]

    def f(i, c=ONE):
        return [(i, c), (i - 1, -c)]

    A, b = [], []
    # F_m + f_m/2 = 1
    A.append(coef(F(m) + f(m, Fraction(1, 2))))
    b.append(ONE)
    for i in range(1, m):
        # F_m - F_i + f_m/2 - F_i - f_i + F_{i+1} + f_{i+1} = 0
        terms = F(m) + F(i, -ONE) + f(m, Fraction(1, 2)) + F(i, -ONE) + f(i, -ONE) + F(i + 1) + f(i + 1)
        A.append(coef(terms))
        b.append(ZERO)
    return [ZERO] + _solve_exact(A, b)


def sqrt2_closed_form(m: int, i: int) -> float:
    s = math.sqrt(2)
    num = (s + 1) ** (m + 1) * (1 - ((2 - s) / 2) ** i) + (s - 1) ** (m + 1) * (1 - ((2 + s) / 2) ** i)
    return num / ((s - 1) ** (m + 1) + (s + 1) ** (m + 1))


def gen_sqrt2(m: int, k: int) -> GeneratedInstance:
    """Alice, B_1..B_m, C_1..C_k over four phases (3m + k epochs).

    Alice asks for nothing through phase 2 and ends with
    F_1 + f_1 - F_m 2^-k instead of F_m + f_m/2 = 1.
    """
    if m < 1 or k < 1:
        raise ValueError("m and k must be at least 1")
    Fs = sqrt2_sequence(m)
    fs = [ZERO] + [Fs[i] - Fs[i - 1] for i in range(1, m + 1)]
    for i in range(1, m):
        if Fs[i + 1] < Fs[i]:
            raise ArithmeticError(f"F is not monotone at i={i}")
    n = 1 + m + k
    alice, B, Cu = 0, (lambda i: i), (lambda i: m + i)
    caps: list = []
    demand_rows: list = []  # per epoch: {user: demand}

    for i in range(1, m + 1):
        caps.append(Fs[i])
        demand_rows.append({B(i): Fs[i]})
    for i in range(1, m + 1):
        caps.append(fs[i])
        demand_rows.append({alice: fs[i], B(i): fs[i]})
    for i in range(1, k + 1):
        caps.append(Fs[m])
        demand_rows.append({alice: Fs[m], Cu(i): Fs[m]})
    caps.append(fs[m])
    demand_rows.append({alice: fs[m], B(m): fs[m]})
    for i in range(m - 1, 0, -1):
        amount = Fs[m] - Fs[i] + fs[m] / 2
        if amount <= 0:
            raise ArithmeticError(f"phase-4 capacity not positive at i={i}")
        caps.append(amount)
        demand_rows.append({alice: amount, B(i): amount})

    T = len(caps)
    truth = [tuple(_single(demand_rows[t].get(u, ZERO)) for t in range(T)) for u in range(n)]
    sc = Scenario(weights=(ONE,) * n, alpha=0, capacities=caps, truth=truth, positive_ratios=True)
    phase2 = range(m, 2 * m)
    dev = ReportProfile({alice}, {(alice, t): _single(ZERO) for t in phase2})
    truthful_total = Fs[m] + fs[m] / 2
    deviated_total = Fs[1] + fs[1] - Fs[m] / 2 ** k
    return _finish(
        "sqrt2", sc, dev, deviated_total / truthful_total,
        f"m={m}, k={k}: Alice under-reports 0 through phase 2; ratio tends to sqrt(2)",
        {"m": m, "k": k, "F": Fs, "truthful_total": truthful_total, "deviated_total": deviated_total},
    )


def multi_lower_slack(eps, delta, w, n1, n2) -> dict:
    """The four 'n large enough' capacity checks of the 1 + rho construction.

    Each value is capacity minus usage of the non-bottleneck resource; all
    must be >= 0 for the construction to witness its ratio.
    """
    eps, delta, w = map(to_fraction, (eps, delta, w))
    cap1 = 1 + n1 * w / (1 + w * eps)
    cap2 = delta / (w * eps) + n2 * delta / (eps * (w + delta))
    return {
        "epoch1_truthful_resource2": cap1 - ((delta + w) / (1 + w * eps) + n1 * w * eps / (1 + w * eps)),
        "epoch1_deviated_resource2": cap1 - (1 / eps + n1 * eps * w / (1 + w * eps)),
        "epoch2_truthful_resource1": cap2 - (delta / (w * eps * (w + delta)) + delta / (w + delta) + n2 * delta / (w + delta)),
        "epoch2_deviated_resource1": cap2 - (1 / (w * eps) + n2 * delta / (w + delta)),
    }


def multi_lower_ratio(eps, delta, w) -> Fraction:
    eps, delta, w = map(to_fraction, (eps, delta, w))
    return (1 / (w * eps)) / (1 / (1 + w * eps) + delta / (w * eps * (w + delta)))


def gen_multi_lower(eps, delta, w, n1: int, n2: int, check_slack: bool = True) -> GeneratedInstance:
    """Two resources, two epochs, 2 + n1 + n2 users; rho of user 0 is 1/(w eps).

    User 0 (weight 1) reports 0 in epoch 1.  With ``check_slack`` the
    generator refuses group sizes too small for the construction.
    """
    eps, delta, w = map(to_fraction, (eps, delta, w))
    if not (0 < delta <= eps < 1):
        raise ScenarioError([f"need 0 < delta <= eps < 1 (got delta={delta}, eps={eps})"])
    if w <= 0:
        raise ScenarioError([f"need w > 0 (got {w})"])
    slack = multi_lower_slack(eps, delta, w, n1, n2)
    if check_slack:
        bad = [f"{name} short by {-v} ({float(-v):.6g})" for name, v in slack.items() if v < 0]
        if bad:
            raise ScenarioError(["n1/n2 too small: " + s for s in bad])

    g3 = w / (1 + w * eps)
    g4 = delta / (eps * (w + delta))
    r1, r2, r3, r4 = (ONE, delta), (eps, ONE), (ONE, eps), (eps, ONE)
    truth = [
        (UserEpochType(r1, UNBOUNDED), UserEpochType(r1, UNBOUNDED)),
        (UserEpochType(r2, UNBOUNDED), UserEpochType(r2, UNBOUNDED)),
    ]
    truth += [(UserEpochType(r3, g3), UserEpochType(r3, ZERO))] * n1
    truth += [(UserEpochType(r4, ZERO), UserEpochType(r4, g4))] * n2
    weights = (ONE,) + (w,) * (1 + n1 + n2)
    caps = (1 + n1 * w / (1 + w * eps), delta / (w * eps) + n2 * delta / (eps * (w + delta)))
    sc = Scenario(weights=weights, alpha=0, capacities=caps, truth=truth, positive_ratios=True)
    dev = ReportProfile({0}, {(0, 0): UserEpochType(r1, ZERO)})
    return _finish(
        "multi-lower", sc, dev, multi_lower_ratio(eps, delta, w),
        f"eps={eps}, delta={delta}, w={w}, n1={n1}, n2={n2}; tends to 1 + 1/(w eps) as delta -> 0",
        {"eps": eps, "delta": delta, "w": w, "n1": n1, "n2": n2, "slack": slack},
    )


def zero_ratio_resources(n: int) -> int:
    return max(3, math.floor(2 + Fraction(n**3, n**2 + 1)))


def gen_zero_ratio_overreport(n: int) -> GeneratedInstance:
    """Alice gains Theta(m) by over-reporting when some ratios are zero.

    Users: Alice (0), n^2 Bobs, then users 1..m-2 each owning a private
    resource that Alice also needs.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    m = zero_ratio_resources(n)
    nn = n * n
    small = Fraction(1, nn)
    alice_r = tuple(ZERO if q == 1 else ONE for q in range(m))
    bob_r = (ONE, 1 - Fraction(1, n**3)) + (ZERO,) * (m - 2)

    def user_r(i):  # i in 1..m-2
        return tuple(
            Fraction(1, n * (m - 2)) if q == 1 else (ONE if q == i + 1 else ZERO) for q in range(m)
        )

    T = m - 1
    caps = (ONE,) + (small,) * (T - 1)
    truth = [tuple(UserEpochType(alice_r, ZERO if t == 0 else small) for t in range(T))]
    truth += [tuple(UserEpochType(bob_r, ONE if t == 0 else ZERO) for t in range(T))] * nn
    for i in range(1, m - 1):
        row = []
        for t in range(T):
            d = ONE if t == 0 else (small if t == i else ZERO)
            row.append(UserEpochType(user_r(i), d))
        truth.append(tuple(row))
    sc = Scenario(weights=(ONE,) * len(truth), alpha=0, capacities=caps, truth=truth)
    dev = ReportProfile({0}, {(0, 0): UserEpochType(alice_r, ONE)})
    truthful = 2 * small * (1 - Fraction(1, 2 ** (m - 2)))
    deviated = (m - 2) * small
    return _finish(
        "zero-ratio", sc, dev, deviated / truthful,
        f"n={n}, m={m}: Alice over-reports demand 1 in epoch 1; factor at least (m-2)/2 = {Fraction(m - 2, 2)}",
        {"n": n, "m": m, "truthful_total": truthful, "deviated_total": deviated, "bound": Fraction(m - 2, 2)},
    )


def sketch_ratio(eps, delta) -> Fraction:
    eps, delta = to_fraction(eps), to_fraction(delta)
    return (1 / eps) / (1 / (1 + eps) + (delta / eps) / (1 + delta))


def gen_two_user_sketch(eps, delta) -> GeneratedInstance:
    """Two users, one resource, two epochs with user-specific ratios.

    Ratios are not normalized here (that is the point of the instance), so
    the scenario is built with ``normalized=False``.
    """
    eps, delta = to_fraction(eps), to_fraction(delta)
    if not (0 < delta <= 1 and 0 < eps < 1):
        raise ScenarioError([f"need 0 < delta <= 1 and 0 < eps < 1 (got {delta}, {eps})"])
    truth = [
        (UserEpochType((ONE,), UNBOUNDED), UserEpochType((delta,), UNBOUNDED)),
        (UserEpochType((eps,), UNBOUNDED), UserEpochType((ONE,), UNBOUNDED)),
    ]
    sc = Scenario(weights=(1, 1), alpha=0, capacities=(ONE, delta / eps), truth=truth,
                  positive_ratios=True, normalized=False)
    dev = ReportProfile({0}, {(0, 0): UserEpochType((ONE,), ZERO)})
    return _finish(
        "two-user-sketch", sc, dev, sketch_ratio(eps, delta),
        f"eps={eps}, delta={delta}; tends to 1 + 1/eps as delta -> 0", {"eps": eps, "delta": delta},
    )


@dataclass(frozen=True)
class RandomConfig:
    n: tuple = (2, 4)
    m: tuple = (1, 1)
    T: tuple = (1, 4)
    alphas: tuple = (Fraction(0), Fraction(1, 2), Fraction(1))
    demand_max: int = 8
    demand_den: int = 2
    capacities: tuple = (Fraction(4), Fraction(6), Fraction(8))
    ratio_den: int = 4
    positive: bool = True
    min_ratio: Fraction = Fraction(1, 4)
    weights: tuple = (Fraction(1),)
    zero_demand_prob: float = 0.25
    unbounded_prob: float = 0.0


def random_scenario(config: RandomConfig, seed: int) -> Scenario:
    """Seeded scenario on a bounded-denominator grid."""
    rng = random.Random(seed)
    n = rng.randint(*config.n)
    m = rng.randint(*config.m)
    T = rng.randint(*config.T)
    alpha = rng.choice(config.alphas)
    weights = tuple(rng.choice(config.weights) for _ in range(n))
    caps = tuple(rng.choice(config.capacities) for _ in range(T))
    lo = config.min_ratio if config.positive else ZERO
    grid = [Fraction(k, config.ratio_den) for k in range(config.ratio_den + 1)]
    grid = [g for g in grid if lo <= g <= 1]
    dgrid = [Fraction(k, config.demand_den) for k in range(1, config.demand_max * config.demand_den + 1)]
    truth = []
    for _ in range(n):
        row = []
        for _ in range(T):
            dom = rng.randrange(m)
            ratios = tuple(ONE if q == dom else rng.choice(grid) for q in range(m))
            u = rng.random()
            if u < config.zero_demand_prob:
                d = ZERO
            elif u < config.zero_demand_prob + config.unbounded_prob:
                d = UNBOUNDED
            else:
                d = rng.choice(dgrid)
            row.append(UserEpochType(ratios, d))
        truth.append(tuple(row))
    sc = Scenario(weights=weights, alpha=alpha, capacities=caps, truth=truth,
                  positive_ratios=config.positive and lo > 0)
    return validate_scenario(sc)
