"""Checkpoint-level operations: score items, predict pair labels, run metrics."""

from __future__ import annotations

import numpy as np

from . import metrics
from .dataio import ItemRecord, PairDataset
from .errors import ConfigError, DataError
from .model import (
    ModelParams,
    PairScoreDiff,
    forward_batch,
    interval_probs,
    predict_label_v2,
)

VARIANTS = ("darn5", "darn-binary", "darn-v2")


def num_labels_for(variant: str) -> int:
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return 2 if variant == "darn-binary" else 5


def score_items(
    params: ModelParams, items: list[ItemRecord], sigma_floor: float
) -> list[tuple[str, float, float]]:
    """Per-item (id, mu, sigma), sorted by mu descending then id ascending."""
    if not items:
        raise DataError("no items to score")
    features = np.stack([it.features for it in items])
    mu, sigma = forward_batch(params.head, features, sigma_floor=sigma_floor)
    scored = [(it.item_id, float(m), float(s)) for it, m, s in zip(items, mu, sigma)]
    scored.sort(key=lambda row: (-row[1], row[0]))
    return scored


def pair_score_diffs(
    params: ModelParams, dataset: PairDataset, sigma_floor: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(mu_left, mu_right, delta_mu, delta_var) for every pair in the dataset."""
    n = dataset.num_pairs
    stacked = np.concatenate([dataset.left, dataset.right], axis=0)
    mu, sigma = forward_batch(params.head, stacked, sigma_floor=sigma_floor)
    mu_l, mu_r = mu[:n], mu[n:]
    dvar = sigma[:n] ** 2 + sigma[n:] ** 2
    return mu_l, mu_r, mu_r - mu_l, dvar


def predict_dataset(
    params: ModelParams, dataset: PairDataset, variant: str, sigma_floor: float
) -> np.ndarray:
    """Predicted label per pair.

    Shared-boundary variants take the most likely bucket; the per-judge
    variant lets each judge who rated a pair predict with their scaled
    boundaries and majority-votes the results.
    """
    num_labels_for(variant)
    _, _, dmu, dvar = pair_score_diffs(params, dataset, sigma_floor)
    if variant == "darn-v2":
        out = np.zeros(dataset.num_pairs, dtype=int)
        judges_by_pair: dict[int, list[str]] = {}
        for i, judge_id, _ in dataset.judgments:
            judges_by_pair.setdefault(i, []).append(judge_id)
        for i in range(dataset.num_pairs):
            raters = judges_by_pair.get(i) or list(params.judges.ids)
            out[i] = predict_label_v2(
                PairScoreDiff(float(dmu[i]), float(dvar[i])),
                params.bounds, params.judges, raters,
            )
        return out
    probs = interval_probs(dmu, dvar, params.bounds.values)
    return np.argmax(probs, axis=1)


def evaluate_metric(
    params: ModelParams,
    dataset: PairDataset | None,
    metric: str,
    variant: str,
    sigma_floor: float,
    truth_scores: dict[str, float] | None = None,
    item_mus: dict[str, float] | None = None,
) -> metrics.EvalReport:
    """Dispatch one named metric over a dataset.

    ``five-way``     prediction accuracy against majority-vote truth
    ``binary``       score-comparison prediction vs collapsed truth
    ``binary-vote``  five-way prediction converted to binary, vs same truth
    ``srcc``         rank correlation of learned item scores vs truth_scores
    """
    if metric == "srcc":
        if not truth_scores:
            raise ConfigError("srcc needs an absolute truth-score table")
        if not item_mus:
            raise ConfigError("srcc needs per-item learned scores")
        common = sorted(set(truth_scores) & set(item_mus))
        if len(common) < 2:
            raise DataError("srcc needs at least 2 items shared with the truth table")
        value = metrics.srcc([truth_scores[i] for i in common],
                             [item_mus[i] for i in common])
        return metrics.EvalReport(metric, value, item_count=len(common),
                                  variant=variant)
    if dataset is None:
        raise ConfigError(f"metric {metric!r} needs a judgment dataset")
    if metric == "five-way":
        if num_labels_for(variant) != 5:
            raise ConfigError("five-way accuracy needs a five-label variant")
        preds = predict_dataset(params, dataset, variant, sigma_floor)
        value = metrics.five_way_accuracy(preds, dataset.counts)
        return metrics.EvalReport(metric, value, pair_count=dataset.num_pairs,
                                  variant=variant)
    if metric == "binary":
        mu_l, mu_r, _, _ = pair_score_diffs(params, dataset, sigma_floor)
        preds = metrics.binary_prediction_from_scores(mu_l, mu_r)
        value = metrics.binary_accuracy(preds, dataset.counts)
        return metrics.EvalReport(metric, value, pair_count=dataset.num_pairs,
                                  variant=variant)
    if metric == "binary-vote":
        five = predict_dataset(params, dataset, variant, sigma_floor)
        if num_labels_for(variant) == 2:
            preds = five  # bucket 1 already means "right better"
        else:
            preds = np.array([metrics.binarize_label(int(l)) for l in five])
        value = metrics.binary_accuracy(preds, dataset.counts)
        return metrics.EvalReport(metric, value, pair_count=dataset.num_pairs,
                                  variant=variant)
    raise ConfigError(f"unknown metric {metric!r}")
