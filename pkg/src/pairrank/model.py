"""Latent-score model core for pairwise ordinal ranking.

Each item receives a Gaussian attractiveness score N(mu, sigma^2) produced by
a small shared-weight ReLU network over its feature vector.  For a pair the
score difference (right minus left) is again Gaussian with mean
``mu_right - mu_left`` and variance ``sigma_left^2 + sigma_right^2``.  An
ordered set of decision boundaries cuts the difference axis into K buckets,
one per ordinal label ("left better" ... "right better" for K=5, or
left/right for K=2); the probability of a label is the Gaussian mass of its
bucket.  Training minimizes the negative log-likelihood of observed judge
counts, optionally with a per-judge multiplicative boundary scale.

All math is plain numpy in double precision with hand-derived gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfc

from .errors import ConfigError, DataError, NumericError, UnknownIdError

SIGMA_FLOOR = 1e-3  # lower bound on a score standard deviation
P_FLOOR = 1e-12     # lower bound on a bucket probability inside logs

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------

@dataclass
class ScoreDistribution:
    """Latent score of one item: mean and (floored) standard deviation."""

    mu: float
    sigma: float


@dataclass
class PairScoreDiff:
    """Gaussian score difference of a pair, right minus left.

    ``delta_var`` is the variance of the difference, i.e. the sum of the two
    item score variances.
    """

    delta_mu: float
    delta_var: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta_mu) and math.isfinite(self.delta_var)):
            raise NumericError("pair score difference must be finite")
        if self.delta_var <= 0.0:
            raise NumericError(f"delta_var must be positive, got {self.delta_var}")


class BoundarySet:
    """Ordered decision boundaries kept strictly increasing by construction.

    The trainable parameters are a free base boundary plus, for each further
    boundary, a raw increment passed through softplus, so the derived values
    ``b_0 < b_1 < ... < b_{K-2}`` stay ordered under any gradient step.
    A set with ``num_labels`` labels has ``num_labels - 1`` boundaries.
    """

    def __init__(self, base: float, raw_increments: np.ndarray | list[float]):
        self.base = np.asarray([base], dtype=np.float64).reshape(1)
        self.raw_increments = np.asarray(raw_increments, dtype=np.float64).reshape(-1)

    @classmethod
    def from_values(cls, values: "np.ndarray | list[float]") -> "BoundarySet":
        """Build from explicit boundary values (must be strictly increasing)."""
        vals = np.asarray(values, dtype=np.float64).reshape(-1)
        if vals.size == 0:
            raise ConfigError("a boundary set needs at least one boundary")
        gaps = np.diff(vals)
        if np.any(gaps <= 0.0):
            raise DataError(f"boundaries must be strictly increasing, got {vals.tolist()}")
        return cls(float(vals[0]), _softplus_inverse(gaps))

    @property
    def num_labels(self) -> int:
        return self.raw_increments.size + 2

    @property
    def values(self) -> np.ndarray:
        """Derived boundaries, shape (num_labels - 1,)."""
        out = np.empty(self.raw_increments.size + 1, dtype=np.float64)
        out[0] = self.base[0]
        if self.raw_increments.size:
            out[1:] = self.base[0] + np.cumsum(_softplus(self.raw_increments))
        return out

    def copy(self) -> "BoundarySet":
        return BoundarySet(float(self.base[0]), self.raw_increments.copy())

    def __repr__(self) -> str:  # pragma: no cover
        return f"BoundarySet(values={self.values.tolist()})"


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x) without overflow for large |x|
    return np.logaddexp(0.0, x)

def _softplus_inverse(y: np.ndarray) -> np.ndarray:
    # inverse of softplus for y > 0: log(e^y - 1)
    y = np.asarray(y, dtype=np.float64)
    return y + np.log(-np.expm1(-y))


@dataclass
class JudgeTable:
    """Per-judge boundary scale factors, parameterized as exp(log_gamma).

    The exponential keeps every scale strictly positive; a fresh judge starts
    at log_gamma = 0, i.e. the shared boundaries unchanged.
    """

    ids: list[str]
    log_gamma: np.ndarray

    def __post_init__(self) -> None:
        self.log_gamma = np.asarray(self.log_gamma, dtype=np.float64).reshape(-1)
        if len(self.ids) != self.log_gamma.size:
            raise ConfigError("judge ids and log_gamma length mismatch")
        self._index = {j: i for i, j in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise DataError("duplicate judge ids in table")

    @classmethod
    def neutral(cls, ids: list[str]) -> "JudgeTable":
        return cls(list(ids), np.zeros(len(ids)))

    def index_of(self, judge_id: str) -> int:
        try:
            return self._index[judge_id]
        except KeyError:
            raise UnknownIdError(f"unknown judge id {judge_id!r}") from None

    def gamma(self, judge_id: str) -> float:
        return float(np.exp(self.log_gamma[self.index_of(judge_id)]))

    def gammas(self) -> np.ndarray:
        return np.exp(self.log_gamma)

    def copy(self) -> "JudgeTable":
        return JudgeTable(list(self.ids), self.log_gamma.copy())


@dataclass
class LabelDistribution:
    """Probability of each of the K ordinal labels for one pair."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=np.float64).reshape(-1)

    def argmax(self) -> int:
        return int(np.argmax(self.probs))


class RankHead:
    """Three ReLU layers plus linear-ReLU mean and deviation output nodes.

    The same parameters score both items of a pair (weight sharing).  Layer
    weights are stored input-major: ``weights[n]`` has shape (fan_in, fan_out)
    and the activation is ``relu(h @ W + b)``.
    """

    def __init__(
        self,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        w_mu: np.ndarray,
        b_mu: np.ndarray,
        w_sigma: np.ndarray,
        b_sigma: np.ndarray,
    ):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64).reshape(-1) for b in biases]
        self.w_mu = np.asarray(w_mu, dtype=np.float64).reshape(-1)
        self.b_mu = np.asarray(b_mu, dtype=np.float64).reshape(1)
        self.w_sigma = np.asarray(w_sigma, dtype=np.float64).reshape(-1)
        self.b_sigma = np.asarray(b_sigma, dtype=np.float64).reshape(1)
        self._check_shapes()

    def _check_shapes(self) -> None:
        prev = self.input_dim
        for n, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            if w.ndim != 2 or w.shape[0] != prev or w.shape[1] != b.size:
                raise ConfigError(f"layer {n} weight shape {w.shape} breaks the chain")
            prev = w.shape[1]
        for name, w in (("mu", self.w_mu), ("sigma", self.w_sigma)):
            if w.size != prev:
                raise ConfigError(f"{name} head expects {prev} inputs, got {w.size}")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights)

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        """Named references to every trainable array, in a fixed order."""
        items: list[tuple[str, np.ndarray]] = []
        for n, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            items.append((f"W{n}", w))
            items.append((f"b{n}", b))
        items.append(("W_mu", self.w_mu))
        items.append(("b_mu", self.b_mu))
        items.append(("W_sigma", self.w_sigma))
        items.append(("b_sigma", self.b_sigma))
        return items

    def copy(self) -> "RankHead":
        return RankHead(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.w_mu.copy(),
            self.b_mu.copy(),
            self.w_sigma.copy(),
            self.b_sigma.copy(),
        )


@dataclass
class ModelParams:
    """Complete trainable state: head, shared boundaries, judge scales."""

    head: RankHead
    bounds: BoundarySet
    judges: JudgeTable

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        items = self.head.param_items()
        items.append(("bound_base", self.bounds.base))
        items.append(("bound_raw_increments", self.bounds.raw_increments))
        items.append(("log_gamma", self.judges.log_gamma))
        return items

    def copy(self) -> "ModelParams":
        return ModelParams(self.head.copy(), self.bounds.copy(), self.judges.copy())


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------

def forward(
    head: RankHead,
    features: np.ndarray,
    dropout_masks: list[np.ndarray] | None = None,
    sigma_floor: float = SIGMA_FLOOR,
) -> ScoreDistribution:
    """Score one item: features -> (mu, sigma).

    ``dropout_masks`` (training mode only) holds one multiplicative mask per
    hidden layer, entries 0 for dropped units and 1/keep_rate for kept ones.
    """
    x = np.asarray(features, dtype=np.float64).reshape(1, -1)
    mu, sigma = forward_batch(head, x, dropout_masks, sigma_floor)
    return ScoreDistribution(float(mu[0]), float(sigma[0]))


def forward_batch(
    head: RankHead,
    features: np.ndarray,
    dropout_masks: list[np.ndarray] | None = None,
    sigma_floor: float = SIGMA_FLOOR,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized forward pass over a (n, D) feature matrix."""
    mu, sigma, _ = _forward_cached(head, features, dropout_masks, sigma_floor)
    return mu, sigma


def _forward_cached(head, features, dropout_masks, sigma_floor):
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != head.input_dim:
        raise ConfigError(
            f"feature dimension {x.shape[-1] if x.ndim else 0} does not match "
            f"head input dimension {head.input_dim}"
        )
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite feature values")
    if dropout_masks is not None and len(dropout_masks) != len(head.weights):
        raise ConfigError("need one dropout mask per hidden layer")

    pre: list[np.ndarray] = []      # pre-activation per layer
    post: list[np.ndarray] = []     # masked ReLU output per layer
    h = x
    with np.errstate(over="ignore", invalid="ignore"):
        for n, (w, b) in enumerate(zip(head.weights, head.biases)):
            a = h @ w + b
            if not np.all(np.isfinite(a)):
                raise NumericError(f"non-finite activation in layer {n + 1}")
            h = np.maximum(a, 0.0)
            if dropout_masks is not None:
                h = h * dropout_masks[n]
            pre.append(a)
            post.append(h)

        a_mu = h @ head.w_mu + head.b_mu[0]
        a_sigma = h @ head.w_sigma + head.b_sigma[0]
    if not (np.all(np.isfinite(a_mu)) and np.all(np.isfinite(a_sigma))):
        raise NumericError("non-finite activation in output heads")
    mu = np.maximum(a_mu, 0.0)
    sigma_raw = np.maximum(a_sigma, 0.0)
    sigma = np.maximum(sigma_raw, sigma_floor)
    cache = {"x": x, "pre": pre, "post": post, "a_mu": a_mu,
             "a_sigma": a_sigma, "sigma_raw": sigma_raw, "masks": dropout_masks}
    return mu, sigma, cache


def pair_diff(left: ScoreDistribution, right: ScoreDistribution) -> PairScoreDiff:
    """Score difference of a pair: right minus left."""
    return PairScoreDiff(right.mu - left.mu, left.sigma ** 2 + right.sigma ** 2)


# ---------------------------------------------------------------------------
# Label probabilities
# ---------------------------------------------------------------------------

def _interval_probs_from_z(z_lo: np.ndarray, z_hi: np.ndarray) -> np.ndarray:
    """P(z_lo < Z <= z_hi) for a standard normal, stable in both tails.

    Deep-tail differences cancel catastrophically if computed as
    Phi(z_hi) - Phi(z_lo); complementary error functions keep full relative
    precision when both edges sit on the same side of zero.
    """
    upper = 0.5 * (erfc(z_lo / _SQRT2) - erfc(z_hi / _SQRT2))
    lower = 0.5 * (erfc(-z_hi / _SQRT2) - erfc(-z_lo / _SQRT2))
    mid = 0.5 * (erf(z_hi / _SQRT2) - erf(z_lo / _SQRT2))
    out = np.where(z_lo > 0.0, upper, np.where(z_hi < 0.0, lower, mid))
    return np.maximum(out, 0.0)


def interval_probs(
    delta_mu: np.ndarray,
    delta_var: np.ndarray,
    bound_values: np.ndarray,
) -> np.ndarray:
    """Bucket probabilities for score differences, shape (n, K).

    ``bound_values`` is either a shared (K-1,) vector or a per-row (n, K-1)
    matrix (used for judge-scaled boundaries).
    """
    dmu = np.asarray(delta_mu, dtype=np.float64).reshape(-1)
    dvar = np.asarray(delta_var, dtype=np.float64).reshape(-1)
    if np.any(dvar <= 0.0):
        raise NumericError("delta_var must be positive")
    bounds = np.asarray(bound_values, dtype=np.float64)
    if bounds.ndim == 1:
        bounds = np.broadcast_to(bounds, (dmu.size, bounds.size))
    n, k_minus_1 = bounds.shape
    edges = np.empty((n, k_minus_1 + 2), dtype=np.float64)
    edges[:, 0] = -np.inf
    edges[:, 1:-1] = bounds
    edges[:, -1] = np.inf
    z = (edges - dmu[:, None]) / np.sqrt(dvar)[:, None]
    return _interval_probs_from_z(z[:, :-1], z[:, 1:])


def pair_label_probs(diff: PairScoreDiff, bounds: BoundarySet) -> LabelDistribution:
    """Probability of each ordinal label for one pair.

    Label K-1 ("right better") gains mass as delta_mu grows.  Probabilities
    are exact bucket masses; flooring happens only inside the cost logs.
    """
    p = interval_probs(
        np.array([diff.delta_mu]), np.array([diff.delta_var]), bounds.values
    )
    return LabelDistribution(p[0])


def predict_label(diff: PairScoreDiff, bounds: BoundarySet) -> int:
    """Most likely label for a pair; ties resolve to the lowest index."""
    return pair_label_probs(diff, bounds).argmax()


def predict_label_v2(
    diff: PairScoreDiff,
    base_bounds: BoundarySet,
    judges: JudgeTable,
    judge_ids: list[str],
) -> int:
    """Majority vote over per-judge most-likely labels.

    Each judge predicts with the shared boundaries scaled by their gamma; the
    winning label is the mode.  A tied mode is broken by the largest summed
    probability mass over the voting judges, then by the lowest label index.
    """
    if not judge_ids:
        raise DataError("prediction needs at least one judge")
    idx = np.array([judges.index_of(j) for j in judge_ids])
    gammas = np.exp(judges.log_gamma[idx])
    scaled = gammas[:, None] * base_bounds.values[None, :]
    probs = interval_probs(
        np.full(len(judge_ids), diff.delta_mu),
        np.full(len(judge_ids), diff.delta_var),
        scaled,
    )
    votes = np.argmax(probs, axis=1)
    counts = np.bincount(votes, minlength=probs.shape[1])
    best = np.flatnonzero(counts == counts.max())
    if best.size == 1:
        return int(best[0])
    mass = probs[:, best].sum(axis=0)
    return int(best[np.argmax(mass)])  # argmax takes the lowest index on ties


# ---------------------------------------------------------------------------
# Likelihood costs
# ---------------------------------------------------------------------------

def darn_cost(
    pairs: list[tuple[PairScoreDiff, np.ndarray]],
    bounds: BoundarySet,
    p_floor: float = P_FLOOR,
) -> float:
    """Negative log-likelihood of per-pair label counts under shared bounds."""
    if not pairs:
        raise DataError("cost needs at least one pair")
    k = bounds.num_labels
    dmu = np.array([d.delta_mu for d, _ in pairs])
    dvar = np.array([d.delta_var for d, _ in pairs])
    counts = np.array([np.asarray(c, dtype=np.float64).reshape(-1) for _, c in pairs])
    if counts.shape[1] != k:
        raise DataError(f"counts must have {k} slots, got {counts.shape[1]}")
    if np.any(counts < 0) or not counts.any():
        raise DataError("counts must be nonnegative with at least one judgment")
    probs = interval_probs(dmu, dvar, bounds.values)
    return float(-(counts * np.log(np.maximum(probs, p_floor))).sum())


def darn_v2_cost(
    pairs: list[tuple[PairScoreDiff, list[tuple[str, int]]]],
    base_bounds: BoundarySet,
    judges: JudgeTable,
    p_floor: float = P_FLOOR,
) -> float:
    """Negative log-likelihood of per-judge labels under judge-scaled bounds."""
    if not pairs:
        raise DataError("cost needs at least one pair")
    k = base_bounds.num_labels
    rows_dmu, rows_dvar, rows_gamma, rows_label = [], [], [], []
    gammas = judges.gammas()
    for i, (diff, labeled) in enumerate(pairs):
        seen: set[str] = set()
        for judge_id, label in labeled:
            if judge_id in seen:
                raise DataError(f"judge {judge_id!r} rated pair {i} more than once")
            seen.add(judge_id)
            if not 0 <= label < k:
                raise DataError(f"label {label} out of range for {k} labels")
            rows_dmu.append(diff.delta_mu)
            rows_dvar.append(diff.delta_var)
            rows_gamma.append(gammas[judges.index_of(judge_id)])
            rows_label.append(label)
    if not rows_label:
        raise DataError("cost needs at least one judgment")
    scaled = np.asarray(rows_gamma)[:, None] * base_bounds.values[None, :]
    probs = interval_probs(np.asarray(rows_dmu), np.asarray(rows_dvar), scaled)
    picked = probs[np.arange(len(rows_label)), rows_label]
    return float(-np.log(np.maximum(picked, p_floor)).sum())


# ---------------------------------------------------------------------------
# Analytic gradients
# ---------------------------------------------------------------------------

@dataclass
class PairBatch:
    """Feature-level batch for end-to-end cost and gradient evaluation.

    Exactly one of ``counts`` (aggregated per-pair label counts, shape (P, K))
    and ``judgments`` (per-judge rows ``(pair_index, judge_id, label)``) is
    set, selecting the shared-boundary or per-judge cost.
    """

    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray | None = None
    judgments: list[tuple[int, str, int]] | None = None

    def __post_init__(self) -> None:
        self.left = np.asarray(self.left, dtype=np.float64)
        self.right = np.asarray(self.right, dtype=np.float64)
        if self.left.shape != self.right.shape or self.left.ndim != 2:
            raise ConfigError("left/right feature matrices must share shape (P, D)")
        if (self.counts is None) == (self.judgments is None):
            raise ConfigError("exactly one of counts and judgments must be given")
        if self.counts is not None:
            self.counts = np.asarray(self.counts, dtype=np.float64)
            if self.counts.shape[0] != self.left.shape[0]:
                raise ConfigError("counts rows must match the number of pairs")

    @property
    def num_pairs(self) -> int:
        return self.left.shape[0]


@dataclass
class Gradients:
    """Cost gradients mirroring every trainable parameter block."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    w_mu: np.ndarray
    b_mu: np.ndarray
    w_sigma: np.ndarray
    b_sigma: np.ndarray
    bound_base: np.ndarray = field(default_factory=lambda: np.zeros(1))
    bound_raw_increments: np.ndarray = field(default_factory=lambda: np.zeros(0))
    log_gamma: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        items: list[tuple[str, np.ndarray]] = []
        for n, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            items.append((f"W{n}", w))
            items.append((f"b{n}", b))
        items.append(("W_mu", self.w_mu))
        items.append(("b_mu", self.b_mu))
        items.append(("W_sigma", self.w_sigma))
        items.append(("b_sigma", self.b_sigma))
        items.append(("bound_base", self.bound_base))
        items.append(("bound_raw_increments", self.bound_raw_increments))
        items.append(("log_gamma", self.log_gamma))
        return items


def cost_and_gradients(
    batch: PairBatch,
    head: RankHead,
    bounds: BoundarySet,
    judges: JudgeTable | None = None,
    dropout_masks: list[np.ndarray] | None = None,
    sigma_floor: float = SIGMA_FLOOR,
    p_floor: float = P_FLOOR,
) -> tuple[float, Gradients]:
    """Cost of a batch plus analytic gradients for every parameter.

    ``dropout_masks`` are per-pair masks, applied identically to both items
    of a pair so the shared trunk stays symmetric within the pair.  ReLU and
    floor kinks take derivative 0 exactly at the kink.
    """
    n_pairs = batch.num_pairs
    if n_pairs == 0:
        raise DataError("gradient evaluation needs a nonempty batch")
    if batch.judgments is not None and judges is None:
        raise ConfigError("per-judge batches need a judge table")

    stacked_masks = None
    if dropout_masks is not None:
        stacked_masks = [np.concatenate([m, m], axis=0) for m in dropout_masks]
    x = np.concatenate([batch.left, batch.right], axis=0)
    mu, sigma, cache = _forward_cached(head, x, stacked_masks, sigma_floor)
    sig_l, sig_r = sigma[:n_pairs], sigma[n_pairs:]
    dmu = mu[n_pairs:] - mu[:n_pairs]
    dvar = sig_l ** 2 + sig_r ** 2
    s = np.sqrt(dvar)
    b_values = bounds.values
    k = bounds.num_labels

    d_dmu = np.zeros(n_pairs)
    d_s = np.zeros(n_pairs)
    db_values = np.zeros(k - 1)
    d_log_gamma = np.zeros(judges.log_gamma.size if judges is not None else 0)

    if batch.counts is not None:
        if batch.counts.shape[1] != k:
            raise DataError(f"counts must have {k} slots, got {batch.counts.shape[1]}")
        row_dmu, row_s = dmu, s
        edge_bounds = np.broadcast_to(b_values, (n_pairs, k - 1))
        row_pair_idx = np.arange(n_pairs)
        weights_per_row = batch.counts  # (P, K) label weights
    else:
        pair_idx = np.array([j[0] for j in batch.judgments], dtype=np.intp)
        judge_idx = np.array([judges.index_of(j[1]) for j in batch.judgments], dtype=np.intp)
        labels = np.array([j[2] for j in batch.judgments], dtype=np.intp)
        if np.any(labels < 0) or np.any(labels >= k):
            raise DataError("judgment label out of range")
        seen_rows = set(zip(pair_idx.tolist(), judge_idx.tolist()))
        if len(seen_rows) != len(labels):
            raise DataError("duplicate (pair, judge) rows in batch")
        row_gamma = np.exp(judges.log_gamma[judge_idx])
        row_dmu = dmu[pair_idx]
        row_s = s[pair_idx]
        edge_bounds = row_gamma[:, None] * b_values[None, :]
        row_pair_idx = pair_idx
        weights_per_row = np.zeros((len(labels), k))
        weights_per_row[np.arange(len(labels)), labels] = 1.0

    n_rows = row_dmu.size
    edges = np.empty((n_rows, k + 1))
    edges[:, 0] = -np.inf
    edges[:, 1:-1] = edge_bounds
    edges[:, -1] = np.inf
    z = (edges - row_dmu[:, None]) / row_s[:, None]
    probs = _interval_probs_from_z(z[:, :-1], z[:, 1:])

    cost = float(-(weights_per_row * np.log(np.maximum(probs, p_floor))).sum())

    # dcost/dp is -n/p above the floor and 0 in the floored flat region
    gp = np.where(probs > p_floor, -weights_per_row / np.maximum(probs, p_floor), 0.0)
    # pdf terms vanish at the infinite outer edges; compute only the interior
    phi = np.zeros_like(z)
    zphi = np.zeros_like(z)
    z_in = z[:, 1:-1]
    phi[:, 1:-1] = _INV_SQRT_2PI * np.exp(-0.5 * z_in * z_in)
    zphi[:, 1:-1] = z_in * phi[:, 1:-1]

    row_d_dmu = (gp * (phi[:, :-1] - phi[:, 1:])).sum(axis=1) / row_s
    row_d_s = (gp * (zphi[:, :-1] - zphi[:, 1:])).sum(axis=1) / row_s
    # gradient on each effective (possibly judge-scaled) boundary value
    row_d_edge = phi[:, 1:-1] / row_s[:, None] * (gp[:, :-1] - gp[:, 1:])

    if batch.counts is not None:
        d_dmu = row_d_dmu
        d_s = row_d_s
        db_values = row_d_edge.sum(axis=0)
    else:
        np.add.at(d_dmu, row_pair_idx, row_d_dmu)
        np.add.at(d_s, row_pair_idx, row_d_s)
        db_values = (row_gamma[:, None] * row_d_edge).sum(axis=0)
        np.add.at(d_log_gamma, judge_idx, row_gamma * (row_d_edge @ b_values))

    # chain boundary-value gradients into the raw parameterization
    d_base = np.array([db_values.sum()])
    if bounds.raw_increments.size:
        tail = np.cumsum(db_values[::-1])[::-1]  # tail[j] = sum_{m >= j} db[m]
        sig = 1.0 / (1.0 + np.exp(-bounds.raw_increments))
        d_raw = sig * tail[1:]
    else:
        d_raw = np.zeros(0)

    # upstream gradients on per-item mu and sigma
    g_mu = np.zeros(2 * n_pairs)
    g_mu[:n_pairs] = -d_dmu
    g_mu[n_pairs:] = d_dmu
    g_sigma = np.zeros(2 * n_pairs)
    g_sigma[:n_pairs] = d_s * sig_l / s
    g_sigma[n_pairs:] = d_s * sig_r / s

    grads = _backprop_head(head, cache, g_mu, g_sigma, sigma_floor)
    grads.bound_base = d_base
    grads.bound_raw_increments = d_raw
    grads.log_gamma = d_log_gamma

    for name, g in grads.param_items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter block {name}")
    return cost, grads


def _backprop_head(head, cache, g_mu, g_sigma, sigma_floor) -> Gradients:
    h_last = cache["post"][-1] if cache["post"] else cache["x"]
    da_mu = g_mu * (cache["a_mu"] > 0.0)
    da_sigma = g_sigma * (cache["sigma_raw"] > sigma_floor)

    d_w_mu = h_last.T @ da_mu
    d_b_mu = np.array([da_mu.sum()])
    d_w_sigma = h_last.T @ da_sigma
    d_b_sigma = np.array([da_sigma.sum()])

    dh = np.outer(da_mu, head.w_mu) + np.outer(da_sigma, head.w_sigma)
    d_weights: list[np.ndarray] = [None] * len(head.weights)
    d_biases: list[np.ndarray] = [None] * len(head.biases)
    masks = cache["masks"]
    for n in range(len(head.weights) - 1, -1, -1):
        if masks is not None:
            dh = dh * masks[n]
        da = dh * (cache["pre"][n] > 0.0)
        h_in = cache["post"][n - 1] if n > 0 else cache["x"]
        d_weights[n] = h_in.T @ da
        d_biases[n] = da.sum(axis=0)
        if n > 0:
            dh = da @ head.weights[n].T
    return Gradients(d_weights, d_biases, d_w_mu, d_b_mu, d_w_sigma, d_b_sigma)
