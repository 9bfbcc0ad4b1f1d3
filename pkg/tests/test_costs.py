from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boothvote import metering
from boothvote.costs import (
    DAY,
    GNOSIS_LIKE,
    HARMONY_ANCHORS,
    HARMONY_LIKE,
    CostModel,
    PlatformProfile,
    calibrate,
    capacity,
    max_candidates,
    meter_mpc_cost_per_voter,
    meter_vote_cost,
    mpc_cost_curve,
    mpc_op_counts,
    predict,
    vote_op_counts,
    votes_per_block,
)


def test_vote_counts_affine_in_k():
    c2, c3, c4 = (vote_op_counts(k) for k in (2, 3, 4))
    for kind in set(c2) | set(c3) | set(c4):
        assert c4.get(kind, 0) - c3.get(kind, 0) == c3.get(kind, 0) - c2.get(kind, 0)
    assert c3[metering.EXP] - c2[metering.EXP] == 5
    assert c2[metering.TX] == 1 and c2[metering.WRITE] == 1


def test_cost_model_rejects_negative():
    with pytest.raises(ValueError):
        CostModel(multiplication=-1)
    with pytest.raises(ValueError):
        CostModel(tx_overhead=0)


def test_cost_formula():
    model = CostModel(1, 2, 3, 4, 5, 6, 7, 8)
    counts = {"tx": 1, "exp": 1, "mul": 1, "write": 1, "read": 1, "hash": 1, "memory": 2}
    assert model.cost(counts) == 1 + 2 + 3 + 4 + 5 + 6 + 14 + 32


def test_vote_cost_strictly_increasing():
    model = CostModel()
    costs = [meter_vote_cost(model, k) for k in range(1, 41)]
    assert all(a < b for a, b in zip(costs, costs[1:]))


def test_vote_cost_affine_fit():
    ks = np.arange(2, 41)
    costs = np.array([float(meter_vote_cost(CostModel(), int(k))) for k in ks])
    slope, intercept = np.polyfit(ks, costs, 1)
    residual = np.abs(costs - (slope * ks + intercept)) / costs
    assert residual.max() < 0.01


def test_capacity_scales_with_period():
    model = CostModel()
    two, five = capacity(HARMONY_LIKE, model, 2, 2 * DAY), capacity(HARMONY_LIKE, model, 2, 5 * DAY)
    assert Fraction(five, two) == Fraction(5, 2)
    with pytest.raises(ValueError):
        capacity(HARMONY_LIKE, model, 2, 0)


def test_doubling_block_limit_doubles_capacity():
    model = CostModel()
    double = PlatformProfile("double", 2 * HARMONY_LIKE.block_gas_limit, HARMONY_LIKE.block_interval)
    one, two = (capacity(p, model, 5, DAY) for p in (HARMONY_LIKE, double))
    assert two - 2 * one <= DAY // HARMONY_LIKE.block_interval


def test_calibration_is_exact_on_its_anchors():
    model = calibrate(HARMONY_LIKE, (HARMONY_ANCHORS[0], HARMONY_ANCHORS[2]))
    for anchor in (HARMONY_ANCHORS[0], HARMONY_ANCHORS[2]):
        blocks = HARMONY_LIKE.blocks_in(anchor.period_seconds)
        assert meter_vote_cost(model, anchor.k) * anchor.voters == HARMONY_LIKE.block_gas_limit * blocks


# holding out the k=38 anchor leaves two k=2 anchors, which cannot be calibrated on
@pytest.mark.parametrize("held_out", [0, 1])
def test_calibration_predicts_held_out_anchor(held_out):
    fit = [a for i, a in enumerate(HARMONY_ANCHORS) if i != held_out]
    model = calibrate(HARMONY_LIKE, fit)
    target = HARMONY_ANCHORS[held_out]
    assert abs(predict(HARMONY_LIKE, model, target) - target.voters) / target.voters < 0.10


def test_calibration_needs_distinct_k():
    with pytest.raises(ValueError):
        calibrate(HARMONY_LIKE, HARMONY_ANCHORS[:2])


def test_default_model_matches_calibration():
    exact = calibrate()
    default = CostModel()
    assert default.tx_overhead == int(exact.tx_overhead)
    assert default.exponentiation == int(exact.exponentiation)


def test_vote_cost_ratio_between_two_and_thirty_eight():
    model = CostModel()
    ratio = meter_vote_cost(model, 38) / meter_vote_cost(model, 2)
    assert abs(ratio - 3_800_000 / 216_000) / (3_800_000 / 216_000) < 0.15


def test_max_candidates():
    model = CostModel()
    assert max_candidates(HARMONY_LIKE, model) == 38
    assert max_candidates(GNOSIS_LIKE, model) == 14
    assert votes_per_block(HARMONY_LIKE, model, 38) == 1


def test_mpc_transaction_counts():
    assert len(mpc_op_counts(6, 1)) == 1 + 6
    assert len(mpc_op_counts(6, 6)) == 2
    with pytest.raises(ValueError):
        mpc_op_counts(6, 7)


def test_mpc_curve_has_interior_minimum():
    curve = mpc_cost_curve(CostModel(), 100)
    best = min(range(len(curve)), key=curve.__getitem__) + 1
    assert 1 < best < 100
    assert best == 34


def test_small_groups_prefer_one_batch():
    # below ~48 voters the per-transaction overhead dominates
    for n in (3, 10, 40):
        curve = mpc_cost_curve(CostModel(), n)
        assert min(range(n), key=curve.__getitem__) + 1 == n


@settings(max_examples=8, deadline=None)
@given(st.integers(48, 150))
def test_mpc_interior_minimum_for_large_groups(n):
    curve = mpc_cost_curve(CostModel(), n)
    best = min(range(n), key=curve.__getitem__) + 1
    assert 1 < best < n


def test_mpc_per_voter_cost_is_exact_fraction():
    assert isinstance(meter_mpc_cost_per_voter(CostModel(), 7, 3), Fraction)
