"""Metric identities, recount oracles, and invariances."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pairrank.errors import DataError
from pairrank.metrics import (
    EvalReport,
    binarize_label,
    binary_accuracy,
    binary_prediction_from_scores,
    five_way_accuracy,
    majority_vote_baseline,
    srcc,
)


# ---------------------------------------------------------------------------
# SRCC
# ---------------------------------------------------------------------------

def test_identical_and_reversed_orderings():
    x = [3.0, 1.0, 4.0, 1.5, 9.0]
    assert srcc(x, x) == 1.0
    assert srcc(x, [-v for v in x]) == -1.0


def test_hand_computed_example():
    # no ties: 1 - 6 * sum(d^2) / (n (n^2 - 1)) with d^2 summing to 4
    assert srcc([1, 2, 3, 4, 5], [1, 3, 2, 5, 4]) == pytest.approx(0.8, abs=1e-15)


def test_ties_match_scipy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.integers(0, 5, 30).astype(float)  # heavy ties
        y = rng.normal(0, 1, 30)
        if np.unique(x).size < 2:
            continue
        want = stats.spearmanr(x, y).statistic
        assert srcc(x, y) == pytest.approx(want, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-500, 500), min_size=3, max_size=30, unique=True),
       st.randoms(use_true_random=False))
def test_invariance_under_strictly_increasing_transforms(grid, rand):
    # spacing >= 0.1 keeps exp() strictly increasing in float arithmetic too
    xs = np.asarray(grid, dtype=np.float64) / 10.0
    ys = list(xs)
    rand.shuffle(ys)
    base = srcc(xs, ys)
    assert srcc(np.exp(xs / 50.0), ys) == pytest.approx(base, abs=1e-12)
    assert srcc(3.0 * xs + 7.0, ys) == pytest.approx(base, abs=1e-12)


def test_srcc_domain_errors():
    with pytest.raises(DataError):
        srcc([1.0], [2.0])
    with pytest.raises(DataError):
        srcc([1.0, 2.0], [2.0])
    with pytest.raises(DataError):
        srcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


# ---------------------------------------------------------------------------
# Accuracies
# ---------------------------------------------------------------------------

def random_counts(rng, n, strict_majority=True):
    counts = np.zeros((n, 5))
    for i in range(n):
        major = rng.integers(0, 5)
        counts[i, major] = 3
        other = rng.integers(0, 5)
        if other != major:
            counts[i, other] = 2
    return counts


def test_perfect_predictor_scores_one():
    rng = np.random.default_rng(0)
    counts = random_counts(rng, 10)
    truth = np.argmax(counts, axis=1)
    assert five_way_accuracy(truth, counts) == 1.0


def test_five_way_recount_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        counts = random_counts(rng, n)
        preds = rng.integers(0, 5, n)
        got = five_way_accuracy(preds, counts)
        want = sum(1 for i in range(n)
                   if preds[i] == int(np.argmax(counts[i]))) / n
        assert got == pytest.approx(want, abs=0.0)


def test_binary_conversion_rules():
    assert binarize_label(3) == 1
    assert binarize_label(4) == 1
    assert binarize_label(2) == 0
    assert binarize_label(0) == 0


def test_equal_scores_predict_left():
    preds = binary_prediction_from_scores(np.array([1.0]), np.array([1.0]))
    assert preds.tolist() == [0]


def test_binary_recount_oracle_and_composition():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        counts = random_counts(rng, n)
        five = rng.integers(0, 5, n)
        converted = np.array([binarize_label(int(l)) for l in five])
        got = binary_accuracy(converted, counts)
        want = sum(
            1 for i in range(n)
            if binarize_label(int(five[i]))
            == binarize_label(int(np.argmax(counts[i])))
        ) / n
        assert got == pytest.approx(want, abs=0.0)


def test_binary_accuracy_is_order_invariant_in_scores():
    rng = np.random.default_rng(4)
    counts = random_counts(rng, 25)
    mu_l = rng.normal(0, 1, 25)
    mu_r = rng.normal(0, 1, 25)
    base = binary_accuracy(binary_prediction_from_scores(mu_l, mu_r), counts)
    transformed = binary_accuracy(
        binary_prediction_from_scores(np.exp(mu_l), np.exp(mu_r)), counts)
    assert base == transformed


def test_accuracy_empty_errors():
    with pytest.raises(DataError):
        five_way_accuracy(np.array([]), np.zeros((0, 5)))
    with pytest.raises(DataError):
        binary_accuracy(np.array([]), np.zeros((0, 5)))


# ---------------------------------------------------------------------------
# Majority-vote baseline
# ---------------------------------------------------------------------------

def test_baseline_examples():
    assert majority_vote_baseline([2, 2, 3]) == 2
    assert majority_vote_baseline([0, 1, 2, 3, 4]) == 0  # uniform: lowest wins
    with pytest.raises(DataError):
        majority_vote_baseline([])


def test_baseline_recount_oracle():
    rng = np.random.default_rng(5)
    labels = rng.integers(0, 5, 1000)
    got = majority_vote_baseline(labels)
    want = int(np.argmax(np.bincount(labels)))
    assert got == want


def test_baseline_shapes_constant_accuracy():
    rng = np.random.default_rng(6)
    counts = random_counts(rng, 200)
    truth = np.argmax(counts, axis=1)
    label = majority_vote_baseline(truth)
    accuracy = five_way_accuracy(np.full(200, label), counts)
    assert accuracy == pytest.approx(np.mean(truth == label))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def test_report_text_is_line_delimited_key_values(tmp_path):
    report = EvalReport("five-way", 0.75, pair_count=8, variant="darn5",
                        config={"seed": 3})
    text = report.to_text()
    assert "metric = five-way" in text.splitlines()
    assert "value = 0.75" in text.splitlines()
    path = tmp_path / "report.txt"
    report.write(path)
    assert path.read_text() == text
