"""One epoch of dynamic weighted DRF, solved by progressive filling.

Users are lifted along a common water level ``lam``: user ``i`` holds
``clamp(w_i * lam - R_i, floor_i, demand_i)`` of her dominant resource.
When a resource saturates, every still-active user that needs it stops.
Users whose floor already puts them above ``lam`` wait until the level
catches up; they count toward resource usage from the start.

The result is the lexicographically max-min fair vector of
``(R_i + r_i) / w_i`` under the floor/cap band and per-resource capacities.
:func:`check_bottleneck_optimality` certifies an allocation independently.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .model import UNBOUNDED, UserEpochType, fair_share, guarantee_amount

ZERO = Fraction(0)


class InfeasibleFloors(ValueError):
    pass


class Freeze(enum.Enum):
    DEMAND_CAP = "demand_cap"
    FLOOR = "floor"
    SATURATED = "saturated"
    UNCONSTRAINED = "unconstrained"


@dataclass(frozen=True)
class FrozenReason:
    kind: Freeze
    resource: int | None = None

    def __str__(self) -> str:
        if self.kind is Freeze.SATURATED:
            return f"saturated({self.resource})"
        return self.kind.value


DEMAND_CAP = FrozenReason(Freeze.DEMAND_CAP)
FLOOR = FrozenReason(Freeze.FLOOR)
UNCONSTRAINED = FrozenReason(Freeze.UNCONSTRAINED)


@dataclass(frozen=True)
class EpochInput:
    cumulative: tuple
    types: tuple
    weights: tuple
    alpha: Fraction
    capacity: Fraction

    def __post_init__(self):
        if not (len(self.cumulative) == len(self.types) == len(self.weights)):
            raise ValueError("cumulative, types and weights must have one entry per user")
        ms = {ut.m for ut in self.types}
        if len(ms) > 1:
            raise ValueError("all users must report the same number of resources")

    @property
    def n(self) -> int:
        return len(self.types)

    @property
    def m(self) -> int:
        return self.types[0].m if self.types else 0

    def floors(self) -> list:
        total = sum(self.weights, ZERO)
        return [
            guarantee_amount(ut.demand, self.alpha, fair_share(w, total, self.capacity))
            for ut, w in zip(self.types, self.weights)
        ]

    def normalized(self, allocations: Sequence[Fraction]) -> list:
        return [(R + r) / w for R, r, w in zip(self.cumulative, allocations, self.weights)]


@dataclass(frozen=True)
class EpochAllocation:
    allocations: tuple
    usage: tuple
    saturated: frozenset
    frozen_reason: tuple


@dataclass(frozen=True)
class FillState:
    """Solver snapshot after each event (exposed for tests)."""

    level: Fraction
    active: frozenset
    remaining: tuple


def resource_usage(amounts: Sequence, types: Sequence[UserEpochType], m: int) -> list:
    """Per-resource usage of dominant-resource amounts (zero terms skipped)."""
    usage = [ZERO] * m
    for x, ut in zip(amounts, types):
        if not x:
            continue
        for q, a in enumerate(ut.ratios):
            if a:
                usage[q] += x * a
    return usage


def clamp_allocation(level: Fraction, i: int, inp: EpochInput, floor: Fraction | None = None) -> Fraction:
    """Allocation of user ``i`` when the water level is ``level``."""
    if floor is None:
        floor = inp.floors()[i]
    want = inp.weights[i] * level - inp.cumulative[i]
    d = inp.types[i].demand
    if d is not UNBOUNDED and want > d:
        want = d
    return want if want > floor else floor


def progressive_fill(inp: EpochInput) -> Iterator[FillState]:
    """Run progressive filling, yielding a FillState after every event.

    The final allocation is available on the generator's return value (see
    :func:`allocate_epoch`).
    """
    n, m, C = inp.n, inp.m, inp.capacity
    W, R = inp.weights, inp.cumulative
    ratios = [ut.ratios for ut in inp.types]
    floors = inp.floors()
    caps = [ut.demand for ut in inp.types]

    alloc = list(floors)
    usage = resource_usage(floors, inp.types, m)
    for q in range(m):
        if usage[q] > C:
            raise InfeasibleFloors(f"floors use {usage[q]} of resource {q}, capacity {C}")

    reason: list = [None] * n
    for i in range(n):
        if caps[i] is not UNBOUNDED and floors[i] >= caps[i]:
            reason[i] = DEMAND_CAP

    # users waiting for the level to reach their floor, by start level
    waiting = sorted(((R[i] + floors[i]) / W[i], i) for i in range(n) if reason[i] is None)
    growing: set = set()
    cap_heap: list = []
    slope = [ZERO] * m
    saturated: set = set()
    wpos = 0
    level = waiting[0][0] if waiting else ZERO

    def start(i):
        growing.add(i)
        if caps[i] is not UNBOUNDED:
            heapq.heappush(cap_heap, ((R[i] + caps[i]) / W[i], i))
        for q in range(m):
            if ratios[i][q]:
                slope[q] += ratios[i][q] * W[i]

    def stop(i, why):
        if i in growing:
            growing.discard(i)
            alloc[i] = W[i] * level - R[i]
            for q in range(m):
                if ratios[i][q]:
                    slope[q] -= ratios[i][q] * W[i]
        reason[i] = why

    while True:
        # events at the current level: caps, saturation, starts
        while cap_heap and cap_heap[0][0] <= level:
            _, i = heapq.heappop(cap_heap)
            if i in growing:
                stop(i, DEMAND_CAP)
                alloc[i] = caps[i]
        newly = [q for q in range(m) if q not in saturated and usage[q] >= C]
        if newly:
            saturated.update(newly)
            for i in range(n):
                if reason[i] is not None:
                    continue
                hit = [q for q in newly if ratios[i][q] > 0]
                if not hit:
                    continue
                if i in growing:
                    stop(i, FrozenReason(Freeze.SATURATED, min(hit)))
                    if alloc[i] == floors[i]:
                        reason[i] = FLOOR
                else:
                    reason[i] = FLOOR
        while wpos < len(waiting) and waiting[wpos][0] <= level:
            i = waiting[wpos][1]
            wpos += 1
            if reason[i] is None:
                start(i)
        while wpos < len(waiting) and reason[waiting[wpos][1]] is not None:
            wpos += 1

        yield FillState(level, frozenset(growing), tuple(C - u for u in usage))

        candidates = []
        if wpos < len(waiting):
            candidates.append(waiting[wpos][0])
        while cap_heap and cap_heap[0][1] not in growing:
            heapq.heappop(cap_heap)
        if cap_heap:
            candidates.append(cap_heap[0][0])
        for q in range(m):
            if q not in saturated and slope[q] > 0:
                candidates.append(level + (C - usage[q]) / slope[q])
        if not candidates:
            break
        nxt = min(candidates)
        step = nxt - level
        if step:
            for q in range(m):
                if slope[q]:
                    usage[q] += slope[q] * step
        level = nxt

    for i in range(n):
        if reason[i] is None:
            reason[i] = UNCONSTRAINED
    return alloc, reason


def allocate_epoch(inp: EpochInput) -> EpochAllocation:
    """Lexicographic max-min fair allocation of one epoch."""
    m, C = inp.m, inp.capacity
    if all(ut.demand is not UNBOUNDED for ut in inp.types):
        usage = resource_usage([ut.demand for ut in inp.types], inp.types, m)
        if all(u <= C for u in usage):
            return EpochAllocation(
                allocations=tuple(ut.demand for ut in inp.types),
                usage=tuple(usage),
                saturated=frozenset(q for q in range(m) if usage[q] == C),
                frozen_reason=(DEMAND_CAP,) * inp.n,
            )
    gen = progressive_fill(inp)
    while True:
        try:
            next(gen)
        except StopIteration as done:
            alloc, reason = done.value
            break
    usage = tuple(resource_usage(alloc, inp.types, m))
    return EpochAllocation(
        allocations=tuple(alloc),
        usage=usage,
        saturated=frozenset(q for q in range(m) if usage[q] == C),
        frozen_reason=tuple(reason),
    )


@dataclass(frozen=True)
class BottleneckViolation:
    user: int
    detail: str


def check_bottleneck_optimality(inp: EpochInput, alloc: EpochAllocation) -> list:
    """Certify max-min optimality through the bottleneck condition.

    Every user below her demand must need some saturated resource on which
    no other user above her floor sits strictly higher (normalized).
    Returns the list of violations; empty means certified.
    """
    r = list(alloc.allocations)
    n, m, C = inp.n, inp.m, inp.capacity
    floors = inp.floors()
    usage = resource_usage(r, inp.types, m)
    level = inp.normalized(r)
    # two highest levels among flexible users of each resource, so the
    # "every other user" test is O(1) per (user, resource)
    top: list = [[] for _ in range(m)]
    for j in range(n):
        if r[j] <= floors[j]:
            continue
        for q in range(m):
            if inp.types[j].ratios[q] > 0:
                top[q].append((level[j], j))
                top[q].sort(reverse=True)
                del top[q][2:]
    out = []
    for i in range(n):
        d = inp.types[i].demand
        if d is not UNBOUNDED and r[i] >= d:
            continue
        blocked = False
        for q in range(m):
            if inp.types[i].ratios[q] <= 0 or usage[q] != C:
                continue
            others = [lv for lv, j in top[q] if j != i]
            if not others or others[0] <= level[i]:
                blocked = True
                break
        if not blocked:
            out.append(BottleneckViolation(i, f"user {i} could grow at level {level[i]}"))
    return out
