"""Independent reference implementations used to cross-check the solver."""

from __future__ import annotations

import random
from fractions import Fraction

from dynfair.allocator import EpochInput
from dynfair.instances import RandomConfig, random_scenario
from dynfair.model import UNBOUNDED, ReportProfile, UserEpochType
from dynfair.strategy import incentive_ratio, interval_analysis

ZERO = Fraction(0)


def water_fill_single(inp: EpochInput) -> list:
    """Single-resource weighted water filling with floors and caps.

    Finds the level by scanning sorted breakpoints and interpolating,
    rather than by simulating freeze events.
    """
    W, R, C = inp.weights, inp.cumulative, inp.capacity
    floors = inp.floors()
    caps = [ut.demand for ut in inp.types]

    def at(lam):
        out = []
        for i in range(inp.n):
            x = W[i] * lam - R[i]
            if caps[i] is not UNBOUNDED:
                x = min(x, caps[i])
            out.append(max(x, floors[i]))
        return out

    if all(c is not UNBOUNDED for c in caps) and sum(caps, ZERO) <= C:
        return list(caps)
    points = sorted({(R[i] + floors[i]) / W[i] for i in range(inp.n)}
                    | {(R[i] + caps[i]) / W[i] for i in range(inp.n) if caps[i] is not UNBOUNDED})
    lo = points[0]
    if sum(at(lo), ZERO) >= C:
        return at(lo)
    for hi in points[1:] + [None]:
        if hi is None:
            # past every breakpoint only unbounded users grow
            slope = sum((W[i] for i in range(inp.n) if caps[i] is UNBOUNDED), ZERO)
            return at(lo + (C - sum(at(lo), ZERO)) / slope)
        if sum(at(hi), ZERO) >= C:
            a, b = sum(at(lo), ZERO), sum(at(hi), ZERO)
            return at(lo + (hi - lo) * (C - a) / (b - a))
        lo = hi


def lex_key(inp: EpochInput, alloc) -> list:
    return sorted(inp.normalized(alloc))


def feasible(inp: EpochInput, alloc) -> bool:
    floors = inp.floors()
    for i, x in enumerate(alloc):
        d = inp.types[i].demand
        if x < floors[i] or (d is not UNBOUNDED and x > d):
            return False
    for q in range(inp.m):
        if sum((x * inp.types[i].ratios[q] for i, x in enumerate(alloc)), ZERO) > inp.capacity:
            return False
    return True


def perturbation_improvement(inp: EpochInput, alloc, step=Fraction(1, 120)):
    """A feasible single-pair transfer with a lexicographically larger sorted vector, or None.

    Raise r_i by ``step`` (alone, or paired with lowering r_j just enough
    to restore feasibility on every resource i uses).
    """
    base = lex_key(inp, alloc)
    n = inp.n
    for i in range(n):
        up = list(alloc)
        up[i] += step
        if feasible(inp, up) and lex_key(inp, up) > base:
            return ("raise", i, None)
        for j in range(n):
            if j == i:
                continue
            need = ZERO
            for q in range(inp.m):
                a_j = inp.types[j].ratios[q]
                over = sum((x * inp.types[k].ratios[q] for k, x in enumerate(up)), ZERO) - inp.capacity
                if over > 0:
                    if a_j == 0:
                        need = None
                        break
                    need = max(need, over / a_j)
            if need is None:
                continue
            trial = list(up)
            trial[j] -= need
            if feasible(inp, trial) and lex_key(inp, trial) > base:
                return ("transfer", i, j)
    return None


def random_tiny_input(seed: int, n_max=3, m_max=2) -> EpochInput:
    rng = random.Random(seed)
    n = rng.randint(2, n_max)
    m = rng.randint(1, m_max)
    grid = [Fraction(k, 4) for k in range(5)]
    types = []
    for _ in range(n):
        dom = rng.randrange(m)
        ratios = tuple(Fraction(1) if q == dom else rng.choice(grid) for q in range(m))
        d = UNBOUNDED if rng.random() < 0.2 else Fraction(rng.randint(0, 12), 2)
        types.append(UserEpochType(ratios, d))
    weights = tuple(Fraction(rng.randint(1, 3)) for _ in range(n))
    cumulative = tuple(Fraction(rng.randint(0, 8), 2) for _ in range(n))
    alpha = rng.choice([Fraction(0), Fraction(1, 2), Fraction(1)])
    return EpochInput(cumulative, tuple(types), weights, alpha, Fraction(rng.randint(2, 8)))


def check_interval_structure(ia):
    seq = []
    for k, s in enumerate(ia.starts):
        seq.append(s)
        if k < len(ia.ends):
            seq.append(ia.ends[k])
    assert seq == sorted(set(seq))
    for k, s in enumerate(ia.starts):
        assert ia.diffs[s] > 0 and (s == 0 or ia.diffs[s - 1] <= 0)
        stop = ia.ends[k] if k < len(ia.ends) else len(ia.diffs)
        assert all(d >= 0 for d in ia.diffs[s:stop])
    for e in ia.ends:
        assert ia.diffs[e] < 0
        assert ia.f[e] == -ia.diffs[e]


def closed_interval_cases(limit=300, want=5):
    """Random single-user deviations whose deviator falls behind again."""
    cfg = RandomConfig(n=(2, 4), T=(4, 6), zero_demand_prob=0.3)
    found = []
    for seed in range(limit):
        sc = random_scenario(cfg, seed)
        rng = random.Random(seed)
        overrides = {}
        for t in range(sc.T):
            truth = sc.truth[0][t]
            overrides[(0, t)] = truth.with_demand(truth.demand * rng.choice([Fraction(0), Fraction(1, 2), Fraction(1)]))
        out = incentive_ratio(sc, ReportProfile({0}, overrides))
        ia = interval_analysis(out.truthful, out.deviated, 0)
        if ia.ends:
            found.append(ia)
        if len(found) >= want:
            break
    return found
