"""JSON encoding of scenarios, report profiles and reports.

Rationals are written as integers or "p/q" strings, the unbounded demand
as "unbounded", so a scenario survives a write/read cycle bit-exactly.
Users and epochs are numbered from 1 in files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .model import (
    UNBOUNDED,
    ReportProfile,
    Scenario,
    ScenarioError,
    UserEpochType,
    to_demand,
    to_fraction,
    validate_profile,
    validate_scenario,
)

FORMAT_VERSION = 1


class ParseError(ValueError):
    """Malformed input file; the message names the line or field."""


def enc(x) -> Any:
    if x is UNBOUNDED:
        return "unbounded"
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (list, tuple)):
        return [enc(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return [enc(v) for v in sorted(x)]
    if isinstance(x, dict):
        return {str(k): enc(v) for k, v in x.items()}
    return x


def _rat(value, where: str) -> Fraction:
    try:
        return to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"field {where}: expected an integer or 'p/q' string, got {value!r}") from exc


def _demand(value, where: str):
    try:
        return to_demand(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"field {where}: expected a rational or 'unbounded', got {value!r}") from exc


def _loads(text: str, what: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{what}: top level must be an object")
    return data


def _field(data: dict, key: str, where: str = ""):
    if key not in data:
        raise ParseError(f"missing field {where}{key}")
    return data[key]


def _type(obj, where: str) -> UserEpochType:
    if not isinstance(obj, dict):
        raise ParseError(f"field {where}: expected an object with ratios and demand")
    ratios = _field(obj, "ratios", where + ".")
    if not isinstance(ratios, list):
        raise ParseError(f"field {where}.ratios: expected a list")
    rs = tuple(_rat(a, f"{where}.ratios[{q}]") for q, a in enumerate(ratios))
    return UserEpochType(rs, _demand(_field(obj, "demand", where + "."), f"{where}.demand"))


def scenario_to_dict(sc: Scenario) -> dict:
    out = {
        "version": FORMAT_VERSION,
        "n": sc.n,
        "m": sc.m,
        "T": sc.T,
        "alpha": enc(sc.alpha),
        "weights": enc(sc.weights),
        "capacities": enc(sc.capacities),
        "positive_ratios": sc.positive_ratios,
        "users": [[{"ratios": enc(ut.ratios), "demand": enc(ut.demand)} for ut in row] for row in sc.truth],
    }
    if not sc.normalized:
        out["normalized"] = False
    return out


def scenario_from_dict(data: dict) -> Scenario:
    n = _field(data, "n")
    m = _field(data, "m")
    T = _field(data, "T")
    for name, v in (("n", n), ("m", m), ("T", T)):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParseError(f"field {name}: expected an integer")
    weights = _field(data, "weights")
    caps = _field(data, "capacities")
    users = _field(data, "users")
    if not isinstance(weights, list) or len(weights) != n:
        raise ParseError(f"field weights: expected a list of {n} entries")
    if not isinstance(caps, list) or len(caps) != T:
        raise ParseError(f"field capacities: expected a list of {T} entries")
    if not isinstance(users, list) or len(users) != n:
        raise ParseError(f"field users: expected {n} rows")
    truth = []
    for i, row in enumerate(users):
        if not isinstance(row, list) or len(row) != T:
            raise ParseError(f"field users[{i}]: expected {T} epochs")
        types = tuple(_type(obj, f"users[{i}][{t}]") for t, obj in enumerate(row))
        for t, ut in enumerate(types):
            if ut.m != m:
                raise ParseError(f"field users[{i}][{t}].ratios: expected {m} entries")
        truth.append(types)
    sc = Scenario(
        weights=tuple(_rat(w, f"weights[{i}]") for i, w in enumerate(weights)),
        alpha=_rat(_field(data, "alpha"), "alpha"),
        capacities=tuple(_rat(c, f"capacities[{t}]") for t, c in enumerate(caps)),
        truth=tuple(truth),
        positive_ratios=bool(data.get("positive_ratios", False)),
        normalized=bool(data.get("normalized", True)),
    )
    return sc


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=1) + "\n"


def loads_scenario(text: str) -> Scenario:
    sc = scenario_from_dict(_loads(text, "scenario"))
    return validate_scenario(sc)


def profile_to_dict(profile: ReportProfile) -> dict:
    rows = []
    for (i, t), ut in sorted(profile.overrides.items()):
        rows.append({"user": i + 1, "epoch": t + 1, "ratios": enc(ut.ratios), "demand": enc(ut.demand)})
    return {"coalition": [i + 1 for i in sorted(profile.coalition)], "overrides": rows}


def profile_from_dict(data: dict) -> ReportProfile:
    coalition = _field(data, "coalition")
    if not isinstance(coalition, list) or not all(isinstance(i, int) and i >= 1 for i in coalition):
        raise ParseError("field coalition: expected a list of user numbers starting at 1")
    overrides = {}
    for k, row in enumerate(data.get("overrides", [])):
        where = f"overrides[{k}]"
        user = _field(row, "user", where + ".")
        epoch = _field(row, "epoch", where + ".")
        if not isinstance(user, int) or not isinstance(epoch, int) or user < 1 or epoch < 1:
            raise ParseError(f"field {where}: user and epoch must be integers starting at 1")
        overrides[(user - 1, epoch - 1)] = _type(row, where)
    return ReportProfile(frozenset(i - 1 for i in coalition), overrides)


def dumps_profile(profile: ReportProfile) -> str:
    return json.dumps(profile_to_dict(profile), indent=1) + "\n"


def loads_profile(text: str, scenario: Scenario | None = None) -> ReportProfile:
    prof = profile_from_dict(_loads(text, "profile"))
    if scenario is not None:
        validate_profile(prof, scenario)
    return prof


def read_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads_scenario(fh.read())


def read_profile(path, scenario: Scenario | None = None) -> ReportProfile:
    with open(path, encoding="utf-8") as fh:
        return loads_profile(fh.read(), scenario)


def dual(x) -> dict | None:
    """Rational rendered both as p/q and as a 12-digit decimal."""
    if x is None:
        return None
    if x is UNBOUNDED:
        return {"exact": "unbounded", "decimal": "inf"}
    x = Fraction(x)
    return {"exact": enc(x), "decimal": float(f"{float(x):.12g}")}


__all__ = [
    "ParseError",
    "ScenarioError",
    "dual",
    "dumps_profile",
    "dumps_scenario",
    "enc",
    "loads_profile",
    "loads_scenario",
    "profile_from_dict",
    "profile_to_dict",
    "read_profile",
    "read_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
]
