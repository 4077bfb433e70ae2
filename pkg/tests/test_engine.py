from __future__ import annotations

import csv
import io
from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from dynfair.allocator import allocate_epoch
from dynfair.engine import epoch_input, ratio_penalty, run, trace_to_csv, true_utility
from dynfair.instances import RandomConfig, gen_example_10_9, random_scenario
from dynfair.model import UNBOUNDED, ReportProfile, UserEpochType


def test_penalty_identity():
    assert ratio_penalty((1, F(1, 3)), (1, F(1, 3))) == 1


def test_penalty_under_reported_ratio():
    assert ratio_penalty((1, 1), (1, F(1, 2))) == F(1, 2)


def test_penalty_over_reported_ratio_capped_at_one():
    assert ratio_penalty((1, F(1, 2)), (1, 1)) == 1


def test_penalty_ignores_true_zero_support():
    assert ratio_penalty((1, 0), (F(1, 2), 1)) == F(1, 2)


def test_utility_caps_at_true_demand():
    assert true_utility(UserEpochType((1,), 3), F(5), F(1)) == 3
    assert true_utility(UserEpochType((1,), UNBOUNDED), F(5), F(1, 2)) == F(5, 2)


class TestTable:
    inst = gen_example_10_9()

    def test_truthful(self):
        tr = run(self.inst.scenario)
        assert tr.allocations == ((4, 4, 0), (2, 0, 6), (3, 5, 0))
        assert tr.final_utility(0) == 9
        assert tr.cumulative[-1] == (9, 9, 6)

    def test_deviated(self):
        tr = run(self.inst.scenario, self.inst.deviation)
        assert tr.allocations == ((0, 8, 0), (4, 0, 4), (6, 2, 0))
        assert tr.final_utility(0) == 10
        assert tr.cumulative[-1][2] == 4

    def test_csv_export(self):
        text = trace_to_csv(run(self.inst.scenario))
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 9
        first = rows[0]
        assert (first["epoch"], first["user"], first["r"], first["r_decimal"]) == ("1", "1", "4", "4")
        assert set(first) >= {"R", "lambda_hat", "u", "U", "U_decimal"}

    def test_csv_decimal_twelve_digits(self):
        from dynfair.engine import fmt_decimal, fmt_rational
        assert fmt_rational(F(10, 9)) == "10/9"
        assert fmt_decimal(F(10, 9)) == "1.11111111111"


RANDOM = RandomConfig(n=(2, 5), m=(1, 3), T=(1, 4), weights=(F(1), F(2)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_truthful_utility_equals_allocation(seed):
    sc = random_scenario(RANDOM, seed)
    tr = run(sc)
    assert tr.utilities == tr.allocations
    assert tr.cumulative_utility == tr.cumulative
    assert all(p == 1 for row in tr.penalties for p in row)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_replay_invariants(seed, data):
    sc = random_scenario(RANDOM, seed)
    i = data.draw(st.integers(0, sc.n - 1))
    t = data.draw(st.integers(0, sc.T - 1))
    truth = sc.truth[i][t]
    m = sc.m
    ratios = data.draw(st.sampled_from([truth.ratios, (F(1),) * m]))
    demand = data.draw(st.sampled_from([F(0), F(1, 2), F(3), UNBOUNDED]))
    prof = ReportProfile({i}, {(i, t): UserEpochType(ratios, demand)})
    tr = run(sc, prof)
    assert tr == run(sc, prof)
    for tt in range(sc.T):
        for q in range(m):
            used = sum(tr.allocations[tt][k] * tr.reported[tt][k].ratios[q] for k in range(sc.n))
            assert used <= sc.capacities[tt]
        for k in range(sc.n):
            assert tr.utilities[tt][k] <= tr.allocations[tt][k]
        running = sum(tr.allocations[x][i] for x in range(tt + 1))
        assert tr.cumulative[tt][i] == running


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_lowering_demands_lowers_total(seed, data):
    # from the same cumulative state, lowering reported demands (same ratios)
    # never raises the epoch's total allocation
    sc = random_scenario(RandomConfig(n=(2, 5), m=(1, 1), T=(1, 1)), seed)
    types = list(sc.epoch_types(0))
    lowered = [ut.with_demand(ut.demand * data.draw(st.sampled_from([F(0), F(1, 2), F(1)]))) for ut in types]
    R = [F(data.draw(st.integers(0, 6))) for _ in types]
    base = allocate_epoch(epoch_input(sc, 0, types, R)).allocations
    low = allocate_epoch(epoch_input(sc, 0, lowered, R)).allocations
    assert sum(low) <= sum(base)
