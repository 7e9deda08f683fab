"""Label-probability math against an integration oracle and its invariants."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pairrank.errors import DataError, NumericError
from pairrank.model import (
    BoundarySet,
    PairScoreDiff,
    interval_probs,
    pair_label_probs,
    predict_label,
)

from conftest import label_probs_quad

BOUNDS_5 = BoundarySet.from_values([-1.5, -0.5, 0.5, 1.5])

# frozen from the quadrature oracle at (delta_mu=0, delta_var=1)
CENTERED_PROBS = (0.0668072013, 0.2417303375, 0.3829249225,
                  0.2417303375, 0.0668072013)


def test_centered_unit_pair_matches_oracle():
    probs = pair_label_probs(PairScoreDiff(0.0, 1.0), BOUNDS_5).probs
    assert probs == pytest.approx(CENTERED_PROBS, abs=1e-9)
    oracle = label_probs_quad(0.0, 1.0, [-1.5, -0.5, 0.5, 1.5])
    assert probs == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("delta_mu,delta_var", [
    (0.7, 0.5), (-2.3, 4.0), (0.01, 0.02), (3.5, 1.7),
])
def test_random_points_match_quadrature(delta_mu, delta_var):
    probs = pair_label_probs(PairScoreDiff(delta_mu, delta_var), BOUNDS_5).probs
    oracle = label_probs_quad(delta_mu, delta_var, [-1.5, -0.5, 0.5, 1.5])
    assert probs == pytest.approx(oracle, abs=1e-9)


def test_symmetric_bounds_give_symmetric_probs():
    probs = pair_label_probs(PairScoreDiff(0.0, 1.0), BOUNDS_5).probs
    assert probs[0] == probs[4]
    assert probs[1] == probs[3]


def test_large_shift_saturates_top_label():
    probs = pair_label_probs(PairScoreDiff(100.0, 1.0), BOUNDS_5).probs
    assert probs[4] >= 1.0 - 1e-12
    assert predict_label(PairScoreDiff(100.0, 1.0), BOUNDS_5) == 4
    probs_neg = pair_label_probs(PairScoreDiff(-100.0, 1.0), BOUNDS_5).probs
    assert probs_neg[0] >= 1.0 - 1e-12


def test_equal_scores_prefer_middle_label():
    assert predict_label(PairScoreDiff(0.0, 1.0), BOUNDS_5) == 2


@settings(max_examples=200, deadline=None)
@given(
    delta_mu=st.floats(-10, 10),
    log_var=st.floats(-4, 2),
    start=st.floats(-3, 0),
    gaps=st.lists(st.floats(0.05, 2.0), min_size=1, max_size=5),
)
def test_normalization_property(delta_mu, log_var, start, gaps):
    values = start + np.concatenate([[0.0], np.cumsum(gaps)])
    probs = interval_probs(
        np.array([delta_mu]), np.array([10.0 ** log_var]), values)[0]
    assert abs(probs.sum() - 1.0) < 1e-12
    assert np.all(probs >= 0.0)


@settings(max_examples=100, deadline=None)
@given(delta_mu=st.floats(-6, 6), gap=st.floats(0.1, 2.0))
def test_flip_consistency_with_antisymmetric_bounds(delta_mu, gap):
    # bounds satisfying b_j = -b_{K-2-j}
    values = np.array([-gap - 0.5, -0.5, 0.5, gap + 0.5])
    forward = interval_probs(np.array([delta_mu]), np.array([1.3]), values)[0]
    backward = interval_probs(np.array([-delta_mu]), np.array([1.3]), values)[0]
    assert forward == pytest.approx(backward[::-1], abs=0.0)


def test_monotone_label_shift():
    grid = np.linspace(-8.0, 8.0, 161)
    probs = interval_probs(grid, np.full(grid.size, 1.0), BOUNDS_5.values)
    top = probs[:, 4]
    bottom = probs[:, 0]
    assert np.all(np.diff(top) > 0.0)
    assert np.all(np.diff(bottom) < 0.0)


def test_binary_reduction_single_boundary():
    bounds = BoundarySet.from_values([0.25])
    diff = PairScoreDiff(0.4, 0.9)
    probs = pair_label_probs(diff, bounds).probs
    assert probs.size == 2
    oracle = label_probs_quad(0.4, 0.9, [0.25])
    assert probs == pytest.approx(oracle, abs=1e-10)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_deep_tail_probabilities_keep_precision():
    # both edges far in the upper tail: naive CDF subtraction would cancel
    values = np.array([8.0, 9.0])
    probs = interval_probs(np.array([0.0]), np.array([1.0]), values)[0]
    oracle = label_probs_quad(0.0, 1.0, [8.0, 9.0])
    assert probs[1] > 0.0
    assert probs[1] == pytest.approx(oracle[1], rel=1e-9)


def test_invalid_inputs_raise():
    with pytest.raises(DataError):
        BoundarySet.from_values([0.5, 0.5])
    with pytest.raises(DataError):
        BoundarySet.from_values([1.0, 0.0])
    with pytest.raises(NumericError):
        PairScoreDiff(0.0, 0.0)
    with pytest.raises(NumericError):
        PairScoreDiff(0.0, -1.0)
    with pytest.raises(NumericError):
        interval_probs(np.array([0.0]), np.array([-1.0]), BOUNDS_5.values)


def test_boundary_set_roundtrip_and_scaling():
    values = BOUNDS_5.values
    assert values == pytest.approx([-1.5, -0.5, 0.5, 1.5], abs=1e-12)
    rebuilt = BoundarySet.from_values(values)
    assert rebuilt.values == pytest.approx(values, abs=1e-12)
    assert np.all(np.diff(BoundarySet.from_values([0.0, 1e-6]).values) > 0)
