"""Dataset formats and judgment plumbing.

All on-disk formats are tab-separated text with a leading format-version
pragma line, chosen for diffability and golden-file testing:

* items:      ``#pairrank-items v1``      item_id, query_id, f0..f{D-1}
* judgments:  ``#pairrank-judgments v1``  one row per (pair, judge) rating
* scores:     ``#pairrank-scores v1``     item_id, absolute mean score

Judgment labels are stored in canonical orientation (as if the pair were
shown unflipped); a flipped presentation maps its on-screen label through the
involution ``label -> K-1-label`` before storage.  Binary datasets reuse the
five-slot count layout with only the outer slots {0, 4} occupied, so the
two-label model path shares all aggregation code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

NUM_LABELS = 5

_ITEMS_PRAGMA = "#pairrank-items v1"
_JUDGMENTS_PRAGMA = "#pairrank-judgments v1"
_SCORES_PRAGMA = "#pairrank-scores v1"

_JUDGMENT_FIELDS = [
    "pair_id", "query_id", "left_item", "right_item",
    "judge_id", "label", "presented_flipped", "timestamp",
]


@dataclass
class ItemRecord:
    """One rankable item: id, query group, and feature vector."""

    item_id: str
    query_id: str
    features: np.ndarray

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.features)):
            raise DataError(f"item {self.item_id!r} has non-finite features")


@dataclass
class JudgmentRecord:
    """One judge's rating of one pair, in canonical orientation."""

    pair_id: str
    query_id: str
    left_item: str
    right_item: str
    judge_id: str
    label: int
    presented_flipped: bool = False
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.label < NUM_LABELS:
            raise DataError(f"label {self.label} out of range on pair {self.pair_id!r}")
        if self.left_item == self.right_item:
            raise DataError(f"pair {self.pair_id!r} compares an item with itself")


@dataclass
class AbsoluteScoreRecord:
    """Absolute mean attractiveness score for one item."""

    item_id: str
    score: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.score):
            raise DataError(f"item {self.item_id!r} has non-finite score")


def make_pair_id(query_id: str, left_item: str, right_item: str) -> str:
    return f"{query_id}:{left_item}:{right_item}"


def canonicalize_label(raw_label: int, flipped: bool, num_labels: int = NUM_LABELS) -> int:
    """Map an on-screen label to canonical orientation (involution when flipped)."""
    if not 0 <= raw_label < num_labels:
        raise DataError(f"raw label {raw_label} out of range")
    return num_labels - 1 - raw_label if flipped else raw_label


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def _read_lines(path: str | Path, pragma: str) -> list[list[str]]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != pragma:
        raise DataError(f"{path}: expected leading pragma {pragma!r}")
    return [line.split("\t") for line in text[2:] if line.strip()]


def write_items(path: str | Path, items: list[ItemRecord]) -> None:
    if items:
        dim = items[0].features.size
        if any(it.features.size != dim for it in items):
            raise DataError("items must share one feature dimension")
    else:
        dim = 0
    header = ["item_id", "query_id"] + [f"f{i}" for i in range(dim)]
    lines = [_ITEMS_PRAGMA, "\t".join(header)]
    for it in items:
        lines.append("\t".join([it.item_id, it.query_id]
                               + [repr(float(v)) for v in it.features]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_items(path: str | Path) -> list[ItemRecord]:
    rows = _read_lines(path, _ITEMS_PRAGMA)
    items = [
        ItemRecord(row[0], row[1], np.array([float(v) for v in row[2:]]))
        for row in rows
    ]
    dims = {it.features.size for it in items}
    if len(dims) > 1:
        raise DataError(f"{path}: mixed feature dimensions {sorted(dims)}")
    return items


def judgments_to_text(records: list[JudgmentRecord]) -> str:
    lines = [_JUDGMENTS_PRAGMA, "\t".join(_JUDGMENT_FIELDS)]
    for r in records:
        lines.append("\t".join([
            r.pair_id, r.query_id, r.left_item, r.right_item, r.judge_id,
            str(r.label), str(int(r.presented_flipped)), repr(float(r.timestamp)),
        ]))
    return "\n".join(lines) + "\n"


def write_judgments(path: str | Path, records: list[JudgmentRecord]) -> None:
    Path(path).write_text(judgments_to_text(records))


def judgments_from_text(text: str) -> list[JudgmentRecord]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _JUDGMENTS_PRAGMA:
        raise DataError(f"expected leading pragma {_JUDGMENTS_PRAGMA!r}")
    records = []
    for row in (line.split("\t") for line in lines[2:] if line.strip()):
        if len(row) != len(_JUDGMENT_FIELDS):
            raise DataError(f"judgment row has {len(row)} fields")
        records.append(JudgmentRecord(
            pair_id=row[0], query_id=row[1], left_item=row[2], right_item=row[3],
            judge_id=row[4], label=int(row[5]),
            presented_flipped=bool(int(row[6])), timestamp=float(row[7]),
        ))
    return records


def read_judgments(path: str | Path) -> list[JudgmentRecord]:
    try:
        return judgments_from_text(Path(path).read_text())
    except DataError as err:
        raise DataError(f"{path}: {err}") from None


def write_scores(path: str | Path, scores: list[AbsoluteScoreRecord]) -> None:
    lines = [_SCORES_PRAGMA, "item_id\tscore"]
    for s in scores:
        lines.append(f"{s.item_id}\t{float(s.score)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_scores(path: str | Path) -> list[AbsoluteScoreRecord]:
    rows = _read_lines(path, _SCORES_PRAGMA)
    return [AbsoluteScoreRecord(row[0], float(row[1])) for row in rows]


# ---------------------------------------------------------------------------
# Aggregation and filtering
# ---------------------------------------------------------------------------

@dataclass
class PairCounts:
    """Aggregated judgments of one pair: counts per label plus raw ratings."""

    pair_id: str
    query_id: str
    left_item: str
    right_item: str
    counts: np.ndarray
    judgments: list[tuple[str, int]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def majority(self) -> int:
        return int(np.argmax(self.counts))

    def has_strict_majority(self) -> bool:
        return self.counts.max() * 2 > self.counts.sum()


def aggregate_counts(records: list[JudgmentRecord]) -> dict[str, PairCounts]:
    """Count labels per pair; each judge may rate a pair at most once."""
    table: dict[str, PairCounts] = {}
    offenders = []
    for r in records:
        entry = table.get(r.pair_id)
        if entry is None:
            entry = PairCounts(r.pair_id, r.query_id, r.left_item, r.right_item,
                               np.zeros(NUM_LABELS))
            table[r.pair_id] = entry
        elif (entry.left_item, entry.right_item) != (r.left_item, r.right_item):
            raise DataError(f"pair {r.pair_id!r} has inconsistent item order")
        if any(j == r.judge_id for j, _ in entry.judgments):
            offenders.append((r.pair_id, r.judge_id))
            continue
        entry.counts[r.label] += 1
        entry.judgments.append((r.judge_id, r.label))
    if offenders:
        raise DataError(f"duplicate (pair, judge) ratings: {offenders}")
    return table


def majority_filter(table: dict[str, PairCounts]) -> dict[str, PairCounts]:
    """Keep only pairs where one label holds a strict majority of ratings."""
    return {pid: pc for pid, pc in table.items() if pc.has_strict_majority()}


# ---------------------------------------------------------------------------
# Pair synthesis from absolute scores
# ---------------------------------------------------------------------------

def synthesize_pairs(
    scores: list[AbsoluteScoreRecord],
    items_sample: int | None,
    partners_per_item: int,
    seed: int = 0,
    judge_id: str = "synth",
    query_id: str = "synth",
) -> list[JudgmentRecord]:
    """Synthesize binary pairs from absolutely-scored items.

    For each sampled item, draws ``partners_per_item`` distinct partners;
    unordered duplicates are dropped.  A pair whose left score is not smaller
    than the right one gets label 0, otherwise label 1; labels live in the
    outer slots {0, 4} of the shared five-slot layout.
    """
    if len(scores) < 2:
        raise DataError("pair synthesis needs at least 2 scored items")
    if partners_per_item >= len(scores):
        raise DataError(
            f"partners_per_item={partners_per_item} needs more than "
            f"{len(scores)} scored items"
        )
    rng = np.random.default_rng(seed)
    by_id = {s.item_id: s.score for s in scores}
    if len(by_id) != len(scores):
        raise DataError("duplicate item ids in score table")
    ids = sorted(by_id)
    if items_sample is None or items_sample >= len(ids):
        sampled = list(ids)
    else:
        sampled = [ids[i] for i in rng.choice(len(ids), size=items_sample, replace=False)]
    seen: set[frozenset[str]] = set()
    records: list[JudgmentRecord] = []
    stamp = 0.0
    for left in sampled:
        pool = [i for i in ids if i != left]
        partner_idx = rng.choice(len(pool), size=partners_per_item, replace=False)
        for pi in partner_idx:
            right = pool[pi]
            key = frozenset((left, right))
            if key in seen:
                continue
            seen.add(key)
            label = 0 if by_id[left] >= by_id[right] else 4
            records.append(JudgmentRecord(
                pair_id=make_pair_id(query_id, left, right),
                query_id=query_id, left_item=left, right_item=right,
                judge_id=judge_id, label=label, timestamp=stamp,
            ))
            stamp += 1.0
    return records


# ---------------------------------------------------------------------------
# Query-level splits
# ---------------------------------------------------------------------------

def split_by_query(
    query_ids: list[str], fractions: tuple[float, float, float], seed: int = 0
) -> tuple[list[str], list[str], list[str]]:
    """Partition query ids into train/validation/test, whole queries only.

    Split sizes use largest-remainder rounding so the partition is exact and
    deterministic under the seed.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    unique = sorted(set(query_ids))
    rng = np.random.default_rng(seed)
    rng.shuffle(unique)
    n = len(unique)
    raw = [f * n for f in fractions]
    sizes = [int(np.floor(r)) for r in raw]
    remainders = [r - s for r, s in zip(raw, sizes)]
    for _ in range(n - sum(sizes)):
        i = int(np.argmax(remainders))
        sizes[i] += 1
        remainders[i] = -1.0
    train = sorted(unique[:sizes[0]])
    val = sorted(unique[sizes[0]:sizes[0] + sizes[1]])
    test = sorted(unique[sizes[0] + sizes[1]:])
    return train, val, test


# ---------------------------------------------------------------------------
# Training-ready pair datasets
# ---------------------------------------------------------------------------

@dataclass
class PairDataset:
    """Feature-resolved pairs with counts and per-judge labels.

    ``counts`` is always the five-slot layout; the two-label view collapses
    buckets as left={0,1,2}, right={3,4}.
    """

    pair_ids: list[str]
    query_ids: list[str]
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    judgments: list[tuple[int, str, int]]
    judge_ids: list[str]
    feature_dim: int

    @property
    def num_pairs(self) -> int:
        return len(self.pair_ids)

    def binary_counts(self) -> np.ndarray:
        return np.stack([self.counts[:, :3].sum(axis=1),
                         self.counts[:, 3:].sum(axis=1)], axis=1)

    def judges_of_pair(self, index: int) -> list[str]:
        return [j for i, j, _ in self.judgments if i == index]


def build_pair_dataset(
    items: list[ItemRecord],
    records: list[JudgmentRecord],
    filter_majority: bool = True,
) -> PairDataset:
    """Resolve judgment records against item features into trainable arrays."""
    if not items:
        raise DataError("no items given")
    dim = items[0].features.size
    by_id = {it.item_id: it for it in items}
    if len(by_id) != len(items):
        raise DataError("duplicate item ids")
    table = aggregate_counts(records)
    if filter_majority:
        table = majority_filter(table)
    pair_ids = sorted(table)
    if not pair_ids:
        raise DataError("no pairs survive aggregation")
    left = np.zeros((len(pair_ids), dim))
    right = np.zeros((len(pair_ids), dim))
    counts = np.zeros((len(pair_ids), NUM_LABELS))
    judgments: list[tuple[int, str, int]] = []
    query_ids = []
    judge_set: set[str] = set()
    for i, pid in enumerate(pair_ids):
        pc = table[pid]
        for side, item_id in (("left", pc.left_item), ("right", pc.right_item)):
            if item_id not in by_id:
                raise DataError(f"pair {pid!r} references unknown item {item_id!r}")
        left[i] = by_id[pc.left_item].features
        right[i] = by_id[pc.right_item].features
        counts[i] = pc.counts
        query_ids.append(pc.query_id)
        for judge_id, label in pc.judgments:
            judgments.append((i, judge_id, label))
            judge_set.add(judge_id)
    return PairDataset(
        pair_ids=pair_ids, query_ids=query_ids, left=left, right=right,
        counts=counts, judgments=judgments, judge_ids=sorted(judge_set),
        feature_dim=dim,
    )


def subset_pairs(dataset: PairDataset, indices: list[int]) -> PairDataset:
    """Row-subset of a dataset, preserving judge table and feature dim."""
    index_map = {old: new for new, old in enumerate(indices)}
    return PairDataset(
        pair_ids=[dataset.pair_ids[i] for i in indices],
        query_ids=[dataset.query_ids[i] for i in indices],
        left=dataset.left[indices],
        right=dataset.right[indices],
        counts=dataset.counts[indices],
        judgments=[(index_map[i], j, l) for i, j, l in dataset.judgments
                   if i in index_map],
        judge_ids=dataset.judge_ids,
        feature_dim=dataset.feature_dim,
    )
