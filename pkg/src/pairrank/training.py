"""Mini-batch likelihood training with deterministic replay and checkpoints.

Everything that moves is seeded: weight init, batch order, and dropout masks,
so two runs with the same seed and data produce byte-identical checkpoints.
The checkpoint file is versioned JSON with sorted keys; parsing and
re-serializing one is a byte-identical round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import engine
from .dataio import PairDataset
from .errors import ConfigError, DataError, NumericError, TrainingDiverged
from .metrics import binary_accuracy, five_way_accuracy
from .model import (
    BoundarySet,
    JudgeTable,
    ModelParams,
    PairBatch,
    RankHead,
    cost_and_gradients,
    forward_batch,
    interval_probs,
)

_CONFIG_PRAGMA = "#pairrank-config v1"
_CHECKPOINT_FORMAT = "pairrank-checkpoint"
_CHECKPOINT_VERSION = 1

DEFAULT_BOUNDS_5 = (-1.5, -0.5, 0.5, 1.5)
DEFAULT_BOUNDS_2 = (0.0,)


@dataclass
class TrainConfig:
    """Hyperparameters; field names double as config-file keys and CLI flags."""

    variant: str = "darn5"          # darn5 | darn-binary | darn-v2
    optimizer: str = "adam"         # adam | sgd
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 10
    seed: int = 0
    dropout: float = 0.5
    hidden_sizes: tuple[int, ...] = (512, 256, 128)
    boundary_init: tuple[float, ...] | None = None
    sigma_floor: float = 1e-3
    p_floor: float = 1e-12
    patience: int = 5               # early-stopping patience, validation epochs

    def __post_init__(self) -> None:
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if self.boundary_init is not None:
            self.boundary_init = tuple(float(b) for b in self.boundary_init)
        self.validate()

    def validate(self) -> None:
        engine.num_labels_for(self.variant)
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.sigma_floor <= 0 or self.p_floor <= 0:
            raise ConfigError("floors must be positive")
        if not all(h >= 1 for h in self.hidden_sizes):
            raise ConfigError("hidden sizes must be positive")

    @property
    def num_labels(self) -> int:
        return engine.num_labels_for(self.variant)

    def boundary_values(self) -> tuple[float, ...]:
        if self.boundary_init is not None:
            if len(self.boundary_init) != self.num_labels - 1:
                raise ConfigError(
                    f"{self.variant} needs {self.num_labels - 1} boundaries, "
                    f"got {len(self.boundary_init)}"
                )
            return self.boundary_init
        return DEFAULT_BOUNDS_5 if self.num_labels == 5 else DEFAULT_BOUNDS_2

    def to_file(self, path: str | Path) -> None:
        lines = [_CONFIG_PRAGMA]
        for key, value in asdict(self).items():
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(repr(v) if isinstance(v, float) else str(v)
                                 for v in value)
            lines.append(f"{key} = {value}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "TrainConfig":
        text = Path(path).read_text().splitlines()
        if not text or text[0].strip() != _CONFIG_PRAGMA:
            raise ConfigError(f"{path}: expected leading pragma {_CONFIG_PRAGMA!r}")
        values: dict = {}
        for lineno, line in enumerate(text[1:], start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            values[key] = raw
        if overrides:
            values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, values: dict) -> "TrainConfig":
        kwargs: dict = {}
        converters = {
            "variant": str, "optimizer": str,
            "learning_rate": float, "batch_size": int, "epochs": int,
            "seed": int, "dropout": float, "sigma_floor": float,
            "p_floor": float, "patience": int,
        }
        for key, raw in values.items():
            if key in converters:
                kwargs[key] = converters[key](raw)
            elif key == "hidden_sizes":
                parts = raw.split(",") if isinstance(raw, str) else raw
                kwargs[key] = tuple(int(p) for p in parts)
            elif key == "boundary_init":
                parts = raw.split(",") if isinstance(raw, str) else raw
                kwargs[key] = tuple(float(p) for p in parts)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return cls(**kwargs)


def init_params(
    config: TrainConfig, feature_dim: int, judge_ids: list[str] | None = None
) -> ModelParams:
    """Seeded parameter init: fan-in-scaled uniform weights, zero biases.

    The deviation head bias starts at 1.0 so initial sigmas are near 1 and
    the score-difference Gaussian is well-conditioned from the first step;
    all judge scales start at 1.
    """
    if feature_dim < 1:
        raise ConfigError("feature_dim must be positive")
    rng = np.random.default_rng(config.seed)
    sizes = [feature_dim, *config.hidden_sizes]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.uniform(-1.0, 1.0, (fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    last = sizes[-1]
    head = RankHead(
        weights, biases,
        w_mu=rng.uniform(-1.0, 1.0, last) / np.sqrt(last), b_mu=[0.0],
        w_sigma=rng.uniform(-1.0, 1.0, last) / np.sqrt(last), b_sigma=[1.0],
    )
    bounds = BoundarySet.from_values(config.boundary_values())
    judges = JudgeTable.neutral(list(judge_ids or []))
    return ModelParams(head, bounds, judges)


class _Sgd:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: ModelParams, grads) -> None:
        gmap = dict(grads.param_items())
        for name, arr in params.param_items():
            arr -= self.learning_rate * gmap[name]


class _Adam:
    def __init__(self, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: ModelParams, grads) -> None:
        self.t += 1
        gmap = dict(grads.param_items())
        for name, arr in params.param_items():
            g = gmap[name]
            m = self.m.setdefault(name, np.zeros_like(arr))
            v = self.v.setdefault(name, np.zeros_like(arr))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            arr -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def _make_optimizer(config: TrainConfig):
    if config.optimizer == "adam":
        return _Adam(config.learning_rate)
    return _Sgd(config.learning_rate)


def _dataset_counts(dataset: PairDataset, config: TrainConfig) -> np.ndarray:
    return dataset.counts if config.num_labels == 5 else dataset.binary_counts()


def _judgments_by_pair(dataset: PairDataset) -> list[list[tuple[str, int]]]:
    grouped: list[list[tuple[str, int]]] = [[] for _ in range(dataset.num_pairs)]
    for i, judge_id, label in dataset.judgments:
        grouped[i].append((judge_id, label))
    return grouped


def _make_batch(dataset, config, idx, grouped) -> PairBatch:
    if config.variant == "darn-v2":
        judgments = [
            (pos, judge_id, label)
            for pos, i in enumerate(idx)
            for judge_id, label in grouped[i]
        ]
        return PairBatch(dataset.left[idx], dataset.right[idx], judgments=judgments)
    counts = _dataset_counts(dataset, config)
    return PairBatch(dataset.left[idx], dataset.right[idx], counts=counts[idx])


def evaluate_loss(dataset: PairDataset, params: ModelParams, config: TrainConfig) -> float:
    """Clean likelihood cost of a dataset: dropout off, no gradient work."""
    if dataset.num_pairs == 0:
        raise DataError("cannot evaluate an empty dataset")
    n = dataset.num_pairs
    stacked = np.concatenate([dataset.left, dataset.right], axis=0)
    mu, sigma = forward_batch(params.head, stacked, sigma_floor=config.sigma_floor)
    dmu = mu[n:] - mu[:n]
    dvar = sigma[:n] ** 2 + sigma[n:] ** 2
    if config.variant == "darn-v2":
        rows = dataset.judgments
        if not rows:
            raise DataError("per-judge variant needs judgment rows")
        pair_idx = np.array([r[0] for r in rows], dtype=np.intp)
        gamma = np.array([params.judges.gamma(r[1]) for r in rows])
        labels = np.array([r[2] for r in rows], dtype=np.intp)
        scaled = gamma[:, None] * params.bounds.values[None, :]
        probs = interval_probs(dmu[pair_idx], dvar[pair_idx], scaled)
        picked = probs[np.arange(len(rows)), labels]
        return float(-np.log(np.maximum(picked, config.p_floor)).sum())
    counts = _dataset_counts(dataset, config)
    probs = interval_probs(dmu, dvar, params.bounds.values)
    return float(-(counts * np.log(np.maximum(probs, config.p_floor))).sum())


def _validation_accuracy(dataset, params, config) -> float:
    preds = engine.predict_dataset(params, dataset, config.variant, config.sigma_floor)
    if config.num_labels == 2:
        return binary_accuracy(preds, dataset.counts)
    return five_way_accuracy(preds, dataset.counts)


def train(
    dataset: PairDataset,
    config: TrainConfig,
    validation: PairDataset | None = None,
) -> "Checkpoint":
    """Optimize model parameters on a judgment dataset.

    With a validation set, training stops once its accuracy has not improved
    for ``patience`` epochs and the best-scoring parameters are restored.
    """
    if dataset.num_pairs == 0:
        raise DataError("cannot train on an empty dataset")
    if config.variant == "darn-v2" and not dataset.judge_ids:
        raise DataError("per-judge variant needs judge ids in the dataset")
    params = init_params(config, dataset.feature_dim, dataset.judge_ids)
    optimizer = _make_optimizer(config)
    order_rng = np.random.default_rng((config.seed, 1))
    mask_rng = np.random.default_rng((config.seed, 2))
    grouped = _judgments_by_pair(dataset) if config.variant == "darn-v2" else None

    loss_history = [evaluate_loss(dataset, params, config)]
    best_acc = -np.inf
    best_params = None
    stale = 0
    epochs_run = 0
    early_stopped = False

    keep = 1.0 - config.dropout
    for epoch in range(config.epochs):
        perm = order_rng.permutation(dataset.num_pairs)
        for batch_no, start in enumerate(range(0, dataset.num_pairs, config.batch_size)):
            idx = perm[start:start + config.batch_size]
            batch = _make_batch(dataset, config, idx, grouped)
            masks = None
            if config.dropout > 0.0:
                masks = [
                    (mask_rng.random((idx.size, h)) < keep).astype(np.float64) / keep
                    for h in config.hidden_sizes
                ]
            try:
                cost, grads = cost_and_gradients(
                    batch, params.head, params.bounds, params.judges, masks,
                    sigma_floor=config.sigma_floor, p_floor=config.p_floor,
                )
            except NumericError as err:
                raise TrainingDiverged(
                    f"epoch {epoch} batch {batch_no}: {err}") from err
            if not np.isfinite(cost):
                raise TrainingDiverged(f"epoch {epoch} batch {batch_no}: cost={cost}")
            optimizer.step(params, grads)
            gaps = np.diff(params.bounds.values)
            if gaps.size and not np.all(gaps > 0):
                raise TrainingDiverged(
                    f"epoch {epoch} batch {batch_no}: boundary order violated")
        epochs_run = epoch + 1
        loss_history.append(evaluate_loss(dataset, params, config))
        if validation is not None:
            acc = _validation_accuracy(validation, params, config)
            if acc > best_acc:
                best_acc = acc
                best_params = params.copy()
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    early_stopped = True
                    break
    if validation is not None and best_params is not None:
        params = best_params
    meta = {
        "epochs_run": epochs_run,
        "early_stopped": early_stopped,
        "loss_history": [float(v) for v in loss_history],
        "final_loss": float(loss_history[-1]),
    }
    if validation is not None and np.isfinite(best_acc):
        meta["best_validation_accuracy"] = float(best_acc)
    return Checkpoint(config=config, params=params,
                      feature_dim=dataset.feature_dim, meta=meta)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    """Trained parameters plus the config and metadata to reproduce them."""

    config: TrainConfig
    params: ModelParams
    feature_dim: int
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        head = self.params.head
        payload = {
            "format": _CHECKPOINT_FORMAT,
            "version": _CHECKPOINT_VERSION,
            "feature_dim": self.feature_dim,
            "config": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in asdict(self.config).items()},
            "head": {
                "weights": [w.tolist() for w in head.weights],
                "biases": [b.tolist() for b in head.biases],
                "w_mu": head.w_mu.tolist(),
                "b_mu": head.b_mu.tolist(),
                "w_sigma": head.w_sigma.tolist(),
                "b_sigma": head.b_sigma.tolist(),
            },
            "bounds": {
                "base": float(self.params.bounds.base[0]),
                "raw_increments": self.params.bounds.raw_increments.tolist(),
            },
            "judges": {
                "ids": list(self.params.judges.ids),
                "log_gamma": self.params.judges.log_gamma.tolist(),
            },
            "meta": self.meta,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "Checkpoint":
        payload = json.loads(text)
        if payload.get("format") != _CHECKPOINT_FORMAT:
            raise ConfigError("not a pairrank checkpoint file")
        if payload.get("version") != _CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {payload.get('version')}")
        cfg_raw = dict(payload["config"])
        for key in ("hidden_sizes", "boundary_init"):
            if cfg_raw.get(key) is not None:
                cfg_raw[key] = tuple(cfg_raw[key])
        config = TrainConfig(**cfg_raw)
        h = payload["head"]
        head = RankHead(h["weights"], h["biases"], h["w_mu"], h["b_mu"],
                        h["w_sigma"], h["b_sigma"])
        bounds = BoundarySet(payload["bounds"]["base"],
                             payload["bounds"]["raw_increments"])
        judges = JudgeTable(payload["judges"]["ids"],
                            payload["judges"]["log_gamma"])
        return cls(config=config, params=ModelParams(head, bounds, judges),
                   feature_dim=int(payload["feature_dim"]),
                   meta=payload.get("meta", {}))

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        return cls.from_json(Path(path).read_text())
