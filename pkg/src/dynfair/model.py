"""Scenario types for the dynamic fair-sharing game.

A scenario fixes everything about one repeated allocation game: user weights,
the per-epoch guarantee fraction ``alpha``, one scalar capacity per epoch
(every resource has the same amount available) and, for every user and epoch,
her true Leontief type (a ratio vector normalized to max 1 plus a demand).

All numbers are :class:`fractions.Fraction`.  Floats only appear at the
reporting boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union


class _Unbounded:
    """Sentinel demand larger than every finite value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __str__(self) -> str:
        return "unbounded"

    def __reduce__(self):
        return (_Unbounded, ())

    def __hash__(self) -> int:
        return hash("dynfair.UNBOUNDED")

    def __eq__(self, other) -> bool:
        return other is self

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True


UNBOUNDED = _Unbounded()

Demand = Union[Fraction, _Unbounded]
RationalLike = Union[int, str, Fraction, float]


class ScenarioError(ValueError):
    """Raised when a scenario or report profile violates its invariants.

    ``errors`` holds one human readable diagnostic per violated field.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def to_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # decimal reading of the float, so 0.1 becomes 1/10
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {x!r} to a rational")


def to_demand(x) -> Demand:
    if x is UNBOUNDED:
        return x
    if isinstance(x, str) and x.strip().lower() in ("unbounded", "inf", "infinity", "∞"):
        return UNBOUNDED
    if isinstance(x, float) and x == float("inf"):
        return UNBOUNDED
    return to_fraction(x)


def scale_demand(d: Demand, factor: Fraction) -> Demand:
    if d is UNBOUNDED:
        return Fraction(0) if factor == 0 else UNBOUNDED
    return d * factor


@dataclass(frozen=True)
class UserEpochType:
    """Leontief type of one user in one epoch.

    ``ratios[q]`` is the amount of resource ``q`` needed per unit of the
    dominant resource; ``demand`` caps the useful allocation.
    """

    ratios: tuple
    demand: Demand = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(to_fraction(a) for a in self.ratios))
        object.__setattr__(self, "demand", to_demand(self.demand))

    @property
    def m(self) -> int:
        return len(self.ratios)

    @property
    def unbounded(self) -> bool:
        return self.demand is UNBOUNDED

    def bundle(self) -> tuple | None:
        """Per-resource demanded amounts ``d * a_q`` (None when unbounded)."""
        if self.demand is UNBOUNDED:
            return None
        return tuple(self.demand * a for a in self.ratios)

    def with_demand(self, demand) -> "UserEpochType":
        return UserEpochType(self.ratios, demand)

    @classmethod
    def absent(cls, m: int) -> "UserEpochType":
        """A user with no demand this epoch (all-1 ratios by convention)."""
        return cls((Fraction(1),) * m, Fraction(0))


@dataclass(frozen=True)
class Scenario:
    """The whole game: users, weights, alpha, capacities and true types.

    ``truth[i][t]`` is user ``i``'s true type in epoch ``t`` (both 0-based).
    ``normalized`` may only be switched off for instances that deliberately
    use un-normalized ratio vectors (e.g. a single resource whose per-user
    ratios differ); the allocator itself does not rely on normalization.
    """

    weights: tuple
    alpha: Fraction
    capacities: tuple
    truth: tuple
    positive_ratios: bool = False
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(to_fraction(w) for w in self.weights))
        object.__setattr__(self, "alpha", to_fraction(self.alpha))
        object.__setattr__(self, "capacities", tuple(to_fraction(c) for c in self.capacities))
        rows = []
        for row in self.truth:
            rows.append(tuple(ut if isinstance(ut, UserEpochType) else UserEpochType(*ut) for ut in row))
        object.__setattr__(self, "truth", tuple(rows))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def T(self) -> int:
        return len(self.capacities)

    @property
    def m(self) -> int:
        for row in self.truth:
            for ut in row:
                return ut.m
        return 0

    @property
    def total_weight(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def type_of(self, i: int, t: int) -> UserEpochType:
        return self.truth[i][t]

    def epoch_types(self, t: int) -> tuple:
        return tuple(self.truth[i][t] for i in range(self.n))

    def has_positive_ratios(self) -> bool:
        return all(a > 0 for row in self.truth for ut in row for a in ut.ratios)


@dataclass(frozen=True)
class ReportProfile:
    """Reported types of a deviating coalition.

    ``overrides`` maps ``(user, epoch)`` to the reported type; every key
    not present is reported truthfully.
    """

    coalition: frozenset = frozenset()
    overrides: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coalition", frozenset(self.coalition))
        object.__setattr__(self, "overrides", dict(self.overrides))

    @property
    def empty(self) -> bool:
        return not self.overrides

    def reported(self, scenario: Scenario, i: int, t: int) -> UserEpochType:
        return self.overrides.get((i, t), scenario.truth[i][t])

    @classmethod
    def truthful(cls, coalition: Iterable[int] = ()) -> "ReportProfile":
        return cls(frozenset(coalition), {})


def _check_type(ut: UserEpochType, m: int, normalized: bool, where: str) -> list[str]:
    errs = []
    if ut.m != m:
        errs.append(f"{where}: expected {m} ratios, got {ut.m}")
        return errs
    for q, a in enumerate(ut.ratios):
        if a < 0 or a > 1:
            errs.append(f"{where}: ratio[{q}] = {a} outside [0, 1]")
    if normalized and ut.ratios and max(ut.ratios) != 1:
        errs.append(f"{where}: max ratio must equal 1 (got {max(ut.ratios)})")
    if not normalized and ut.ratios and max(ut.ratios) == 0:
        errs.append(f"{where}: ratio vector is all zero")
    if ut.demand is not UNBOUNDED and ut.demand < 0:
        errs.append(f"{where}: demand {ut.demand} is negative")
    return errs


def validate_scenario(raw: Scenario) -> Scenario:
    """Return ``raw`` unchanged if every invariant holds, else raise ScenarioError."""
    errs: list[str] = []
    if raw.n < 2:
        errs.append(f"n must be at least 2 (got {raw.n})")
    if raw.T < 1:
        errs.append("at least one epoch is required")
    m = raw.m
    if m < 1:
        errs.append("at least one resource is required")
    for i, w in enumerate(raw.weights):
        if w <= 0:
            errs.append(f"weights strictly positive: weight[{i}] = {w}")
    if not 0 <= raw.alpha <= 1:
        errs.append(f"alpha must lie in [0, 1] (got {raw.alpha})")
    for t, c in enumerate(raw.capacities):
        if c <= 0:
            errs.append(f"capacity[{t}] = {c} must be strictly positive")
    if len(raw.truth) != raw.n:
        errs.append(f"truth has {len(raw.truth)} user rows, expected {raw.n}")
    for i, row in enumerate(raw.truth):
        if len(row) != raw.T:
            errs.append(f"user {i}: missing epoch(s), {len(row)} of {raw.T} given")
            continue
        for t, ut in enumerate(row):
            errs.extend(_check_type(ut, m, raw.normalized, f"user {i} epoch {t}"))
    if raw.positive_ratios and not errs and not raw.has_positive_ratios():
        errs.append("positive_ratios flag set but some ratio is 0")
    if errs:
        raise ScenarioError(errs)
    # floors must be jointly feasible; holds by construction, guarded anyway
    total = raw.total_weight
    for t in range(raw.T):
        floors = [
            guarantee_amount(raw.truth[i][t].demand, raw.alpha, fair_share(raw.weights[i], total, raw.capacities[t]))
            for i in range(raw.n)
        ]
        for q in range(m):
            used = sum((g * raw.truth[i][t].ratios[q] for i, g in enumerate(floors) if g), Fraction(0))
            if used > raw.capacities[t]:
                raise ScenarioError([f"epoch {t}: guarantees over-use resource {q}"])
    return raw


def validate_profile(profile: ReportProfile, scenario: Scenario) -> ReportProfile:
    errs: list[str] = []
    for i in profile.coalition:
        if not 0 <= i < scenario.n:
            errs.append(f"coalition member {i} out of range")
    for (i, t), ut in profile.overrides.items():
        if i not in profile.coalition:
            errs.append(f"override for user {i} who is outside the coalition")
        if not 0 <= t < scenario.T:
            errs.append(f"override for epoch {t} out of range")
        errs.extend(_check_type(ut, scenario.m, scenario.normalized, f"report of user {i} epoch {t}"))
    if errs:
        raise ScenarioError(errs)
    return profile


def fair_share(weight: Fraction, total_weight: Fraction, capacity: Fraction) -> Fraction:
    return capacity * weight / total_weight


def guarantee_amount(demand: Demand, alpha: Fraction, share: Fraction) -> Fraction:
    floor = alpha * share
    if demand is UNBOUNDED:
        return floor
    return min(demand, floor)


def guarantee(i: int, t: int, scenario: Scenario, demand: Demand | None = None) -> Fraction:
    """Per-epoch floor ``min(d, alpha * R^t * w_i / sum w)``.

    ``demand`` defaults to the true demand; pass a reported demand to get the
    floor the mechanism actually enforces.
    """
    if demand is None:
        demand = scenario.truth[i][t].demand
    share = fair_share(scenario.weights[i], scenario.total_weight, scenario.capacities[t])
    return guarantee_amount(demand, scenario.alpha, share)


def normalize_capacities(per_resource: Sequence[Sequence[RationalLike]], scenario: Scenario) -> Scenario:
    """Rescale per-resource capacities to one scalar capacity per epoch.

    ``per_resource[t][q]`` is the amount of resource ``q`` in epoch ``t``.
    The scalar capacity becomes ``min_q C_q``; resource ``q`` is measured in
    units of ``C_q / R`` so every resource has ``R`` units.  Each type is then
    re-normalized to max ratio 1, scaling the demand so the demanded bundle
    (as a fraction of each resource's capacity) is unchanged.
    """
    caps = [[to_fraction(c) for c in row] for row in per_resource]
    errs = []
    if len(caps) != scenario.T:
        errs.append(f"expected {scenario.T} capacity rows, got {len(caps)}")
    for t, row in enumerate(caps):
        if len(row) != scenario.m:
            errs.append(f"epoch {t}: expected {scenario.m} capacities, got {len(row)}")
        for q, c in enumerate(row):
            if c <= 0:
                errs.append(f"epoch {t}: capacity of resource {q} must be positive (got {c})")
    if errs:
        raise ScenarioError(errs)

    scalars = [min(row) for row in caps]
    truth = []
    for row in scenario.truth:
        new_row = []
        for t, ut in enumerate(row):
            scale = [scalars[t] / c for c in caps[t]]
            scaled = [a * s for a, s in zip(ut.ratios, scale)]
            top = max(scaled)
            if top == 0:
                new_row.append(ut)
                continue
            demand = scale_demand(ut.demand, top)
            new_row.append(UserEpochType(tuple(a / top for a in scaled), demand))
        truth.append(tuple(new_row))
    return replace(scenario, capacities=tuple(scalars), truth=tuple(truth))
