"""Evaluation metrics: five-way and binary pair accuracy, rank correlation.

Binary truth collapses the five labels as {right better, right slightly
better} -> 1 and everything else -> 0; a score-based binary prediction is 0
whenever the left score is not smaller than the right one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass
class EvalReport:
    """One metric result with enough context to reproduce it."""

    metric: str
    value: float
    pair_count: int = 0
    item_count: int = 0
    variant: str = ""
    config: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"metric = {self.metric}", f"value = {self.value!r}"]
        if self.pair_count:
            lines.append(f"pairs = {self.pair_count}")
        if self.item_count:
            lines.append(f"items = {self.item_count}")
        if self.variant:
            lines.append(f"variant = {self.variant}")
        for key in sorted(self.config):
            lines.append(f"{key} = {self.config[key]}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def five_way_accuracy(predictions: np.ndarray, truth_counts: np.ndarray) -> float:
    """Fraction of pairs whose prediction hits the majority-vote truth label.

    ``truth_counts`` rows are per-pair label counts that already passed the
    strict-majority filter, so the majority label is unambiguous.
    """
    predictions = np.asarray(predictions)
    truth_counts = np.asarray(truth_counts)
    if predictions.size == 0:
        raise DataError("accuracy of an empty pair set is undefined")
    if truth_counts.shape[0] != predictions.size:
        raise DataError("predictions and truth counts must align")
    truth = np.argmax(truth_counts, axis=1)
    return float(np.mean(predictions == truth))


def binarize_label(label: int) -> int:
    """Five-way label to binary: 1 for right (slightly) better, else 0."""
    return 1 if label >= 3 else 0


def binary_prediction_from_scores(mu_left: np.ndarray, mu_right: np.ndarray) -> np.ndarray:
    """0 where the left score is not smaller than the right, else 1."""
    return (np.asarray(mu_left) < np.asarray(mu_right)).astype(int)


def binary_accuracy(predictions: np.ndarray, truth_counts: np.ndarray) -> float:
    """Fraction of pairs whose binary prediction matches the collapsed truth."""
    predictions = np.asarray(predictions)
    truth_counts = np.asarray(truth_counts)
    if predictions.size == 0:
        raise DataError("accuracy of an empty pair set is undefined")
    truth5 = np.argmax(truth_counts, axis=1)
    truth = (truth5 >= 3).astype(int)
    return float(np.mean(predictions == truth))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values receive the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def srcc(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise DataError("rank correlation needs at least 2 points")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = np.sqrt((sx * sx).sum() * (sy * sy).sum())
    if denom == 0.0:
        raise DataError("rank correlation is undefined for a constant vector")
    return float((sx * sy).sum() / denom)


def majority_vote_baseline(truth_labels) -> int:
    """Globally modal truth label; ties resolve to the lowest index."""
    labels = np.asarray(list(truth_labels), dtype=int)
    if labels.size == 0:
        raise DataError("baseline needs at least one labeled pair")
    counts = np.bincount(labels)
    return int(np.argmax(counts))
