"""Forward pass against a straight-line scalar re-implementation."""

import numpy as np
import pytest

from pairrank.errors import ConfigError, NumericError
from pairrank.model import SIGMA_FLOOR, RankHead, forward, forward_batch

from conftest import make_random_head


def reference_forward(head, x, masks, sigma_floor):
    """Loop-only evaluation of the three-layer ReLU chain and both heads."""
    h = list(x)
    for layer, (w, b) in enumerate(zip(head.weights, head.biases)):
        nxt = []
        for j in range(w.shape[1]):
            acc = b[j]
            for i in range(w.shape[0]):
                acc += w[i][j] * h[i]
            acc = max(acc, 0.0)
            if masks is not None:
                acc *= masks[layer][j]
            nxt.append(acc)
        h = nxt
    a_mu = head.b_mu[0]
    a_sigma = head.b_sigma[0]
    for i in range(len(h)):
        a_mu += head.w_mu[i] * h[i]
        a_sigma += head.w_sigma[i] * h[i]
    mu = max(a_mu, 0.0)
    sigma = max(max(a_sigma, 0.0), sigma_floor)
    return mu, sigma


def test_zero_network_floors_sigma():
    head = RankHead(
        [np.zeros((3, 4)), np.zeros((4, 4)), np.zeros((4, 2))],
        [np.zeros(4), np.zeros(4), np.zeros(2)],
        w_mu=np.zeros(2), b_mu=[0.0], w_sigma=np.zeros(2), b_sigma=[0.0],
    )
    out = forward(head, [1.0, -2.0, 3.0])
    assert out.mu == 0.0
    assert out.sigma == SIGMA_FLOOR


def test_identity_chain_passes_positive_values():
    head = RankHead(
        [np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1))],
        [np.zeros(1), np.zeros(1), np.zeros(1)],
        w_mu=np.ones(1), b_mu=[0.0], w_sigma=np.ones(1), b_sigma=[0.0],
    )
    out = forward(head, [2.0])
    assert out.mu == 2.0
    assert out.sigma == 2.0


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_random_head_matches_reference(seed):
    rng = np.random.default_rng(seed)
    head = make_random_head(rng)
    x = rng.normal(0.0, 1.0, head.input_dim)
    got = forward(head, x)
    want_mu, want_sigma = reference_forward(head, x, None, SIGMA_FLOOR)
    assert got.mu == pytest.approx(want_mu, abs=1e-12)
    assert got.sigma == pytest.approx(want_sigma, abs=1e-12)


def test_dropout_mask_matches_reference_and_is_deterministic():
    rng = np.random.default_rng(7)
    head = make_random_head(rng)
    x = rng.uniform(0.0, 1.0, head.input_dim)
    masks = [(rng.random(h) < 0.5).astype(float) * 2.0 for h in head.hidden_sizes]
    got1 = forward(head, x, dropout_masks=masks)
    got2 = forward(head, x, dropout_masks=masks)
    assert (got1.mu, got1.sigma) == (got2.mu, got2.sigma)
    want_mu, want_sigma = reference_forward(head, x, masks, SIGMA_FLOOR)
    assert got1.mu == pytest.approx(want_mu, abs=1e-12)
    assert got1.sigma == pytest.approx(want_sigma, abs=1e-12)


def test_shared_weights_give_identical_outputs():
    rng = np.random.default_rng(11)
    head = make_random_head(rng)
    x = rng.uniform(0.0, 1.0, head.input_dim)
    left = forward(head, x)
    right = forward(head, x)
    assert left.mu == right.mu and left.sigma == right.sigma
    mu, sigma = forward_batch(head, np.stack([x, x]))
    assert mu[0] == mu[1] and sigma[0] == sigma[1]


def test_dimension_mismatch_is_config_error():
    rng = np.random.default_rng(3)
    head = make_random_head(rng, dim=4)
    with pytest.raises(ConfigError):
        forward(head, [1.0, 2.0])


def test_non_finite_activation_names_layer():
    head = RankHead(
        [np.full((2, 2), 1e200), np.full((2, 2), 1e200), np.ones((2, 1))],
        [np.zeros(2), np.zeros(2), np.zeros(1)],
        w_mu=np.ones(1), b_mu=[0.0], w_sigma=np.ones(1), b_sigma=[0.0],
    )
    with pytest.raises(NumericError, match="layer 2"):
        forward(head, [1.0, 1.0])


def test_mismatched_layer_shapes_rejected():
    with pytest.raises(ConfigError):
        RankHead([np.ones((3, 4)), np.ones((5, 2))], [np.zeros(4), np.zeros(2)],
                 w_mu=np.ones(2), b_mu=[0.0], w_sigma=np.ones(2), b_sigma=[0.0])
