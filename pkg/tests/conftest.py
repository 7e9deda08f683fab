"""Shared oracles and instance builders for the test suite.

The probability oracle integrates the Gaussian density numerically (never
touching the library's erf/erfc path), and the gradient oracle is a central
finite-difference harness over every trainable parameter.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from pairrank.model import (
    BoundarySet,
    JudgeTable,
    PairBatch,
    RankHead,
    cost_and_gradients,
)


def normal_pdf(x: float, mean: float, var: float) -> float:
    return math.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2.0 * math.pi * var)


def interval_prob_quad(lo: float, hi: float, mean: float, var: float) -> float:
    """Bucket mass by adaptive quadrature; fully independent of erf/erfc."""
    span = 12.0 * math.sqrt(var)
    lo_eff = max(lo, mean - span)
    hi_eff = min(hi, mean + span)
    if hi_eff <= lo_eff:
        return 0.0
    value, _ = quad(normal_pdf, lo_eff, hi_eff, args=(mean, var), limit=200)
    return value


def label_probs_quad(delta_mu: float, delta_var: float, bounds: list[float]) -> list[float]:
    edges = [-math.inf, *bounds, math.inf]
    return [interval_prob_quad(edges[j], edges[j + 1], delta_mu, delta_var)
            for j in range(len(bounds) + 1)]


# ---------------------------------------------------------------------------
# Random instances for gradient checks
# ---------------------------------------------------------------------------

def make_random_head(rng: np.random.Generator, dim: int = 4,
                     hidden: tuple[int, ...] = (5, 4, 3)) -> RankHead:
    weights, biases = [], []
    prev = dim
    for h in hidden:
        weights.append(rng.uniform(-1.0, 1.0, (prev, h)) / np.sqrt(prev))
        biases.append(rng.uniform(0.0, 0.2, h))
        prev = h
    # the deviation bias keeps sigma comfortably above its floor so finite
    # differences never straddle the max() kink
    return RankHead(
        weights, biases,
        w_mu=rng.uniform(-1.0, 1.0, prev) / np.sqrt(prev), b_mu=[0.1],
        w_sigma=rng.uniform(-1.0, 1.0, prev) / np.sqrt(prev), b_sigma=[0.8],
    )


def make_random_instance(seed: int, num_labels: int, with_judges: bool,
                         with_dropout: bool = False, num_pairs: int = 5):
    rng = np.random.default_rng(seed)
    dim, hidden = 4, (5, 4, 3)
    head = make_random_head(rng, dim, hidden)
    if num_labels == 5:
        bounds = BoundarySet.from_values([-1.5, -0.5, 0.5, 1.5])
    else:
        bounds = BoundarySet.from_values([0.0])
    judges = None
    judge_ids = ["ja", "jb", "jc"]
    if with_judges:
        judges = JudgeTable(judge_ids, rng.normal(0.0, 0.3, len(judge_ids)))
    left = rng.uniform(0.2, 1.0, (num_pairs, dim))
    right = rng.uniform(0.2, 1.0, (num_pairs, dim))
    if with_judges:
        judgments = [(i, judge_id, int(rng.integers(0, num_labels)))
                     for i in range(num_pairs) for judge_id in judge_ids]
        batch = PairBatch(left, right, judgments=judgments)
    else:
        counts = rng.integers(0, 4, (num_pairs, num_labels)).astype(float)
        counts[0, 0] += 1.0  # at least one judgment overall
        batch = PairBatch(left, right, counts=counts)
    masks = None
    if with_dropout:
        masks = [(rng.random((num_pairs, h)) < 0.5).astype(np.float64) * 2.0
                 for h in hidden]
    return head, bounds, judges, batch, masks


def finite_difference_gradients(batch, head, bounds, judges, masks,
                                step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central finite differences of the cost over every parameter entry."""

    def cost() -> float:
        value, _ = cost_and_gradients(batch, head, bounds, judges, masks)
        return value

    param_arrays = dict(head.param_items())
    param_arrays["bound_base"] = bounds.base
    param_arrays["bound_raw_increments"] = bounds.raw_increments
    if judges is not None:
        param_arrays["log_gamma"] = judges.log_gamma
    out: dict[str, np.ndarray] = {}
    for name, arr in param_arrays.items():
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = cost()
            flat[i] = original - step
            down = cost()
            flat[i] = original
            gflat[i] = (up - down) / (2.0 * step)
        out[name] = grad
    return out


def max_relative_gradient_error(batch, head, bounds, judges, masks) -> float:
    _, analytic = cost_and_gradients(batch, head, bounds, judges, masks)
    numeric = finite_difference_gradients(batch, head, bounds, judges, masks)
    amap = dict(analytic.param_items())
    worst = 0.0
    for name, fd in numeric.items():
        a = np.asarray(amap[name], dtype=np.float64)
        if a.size == 0:
            continue
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(fd)))
        worst = max(worst, float((np.abs(a - fd) / denom).max()))
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)
