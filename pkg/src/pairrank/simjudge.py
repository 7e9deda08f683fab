"""Synthetic judge population over a planted world.

A planted world fixes per-item true score means and deviations, a set of
decision boundaries, and per-judge scale factors.  Judges then label pairs by
drawing from the exact categorical distribution the model math assigns,
which makes end-to-end parameter-recovery tests possible: train on sampled
judgments, compare against the planted truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import ItemRecord
from .errors import DataError, UnknownIdError
from .model import SIGMA_FLOOR, BoundarySet, interval_probs
from .tournament import CampaignResult, LabelSource, run_campaign

_WORLD_PRAGMA = "#pairrank-world v1"


@dataclass
class PlantedItem:
    item_id: str
    query_id: str
    true_mu: float
    true_sigma: float


class PlantedWorld:
    """Ground-truth scores, boundaries, and judge scales plus a seeded RNG."""

    def __init__(
        self,
        items: list[PlantedItem],
        bound_values,
        judge_gammas: dict[str, float],
        seed: int = 0,
    ):
        self.items = {it.item_id: it for it in items}
        if len(self.items) != len(items):
            raise DataError("duplicate item ids in planted world")
        for it in items:
            if it.true_sigma < SIGMA_FLOOR:
                raise DataError(f"planted sigma for {it.item_id!r} below floor")
        # validates strict ordering
        self.bound_values = BoundarySet.from_values(bound_values).values
        self.judge_ids = sorted(judge_gammas)
        if not self.judge_ids:
            raise DataError("planted world needs at least one judge")
        self.judge_gammas = {j: float(judge_gammas[j]) for j in self.judge_ids}
        if any(g <= 0 for g in self.judge_gammas.values()):
            raise DataError("judge scale factors must be positive")
        self.seed = seed
        self._label_rng = np.random.default_rng((seed, 7))
        self._panel_rng = np.random.default_rng((seed, 11))
        self._cdf_cache: dict[tuple[str, str, str], np.ndarray] = {}

    @property
    def num_labels(self) -> int:
        return self.bound_values.size + 1

    def items_by_query(self) -> dict[str, list[str]]:
        grouped: dict[str, list[str]] = {}
        for it in self.items.values():
            grouped.setdefault(it.query_id, []).append(it.item_id)
        return {q: sorted(ids) for q, ids in grouped.items()}

    def _item(self, item_id: str) -> PlantedItem:
        try:
            return self.items[item_id]
        except KeyError:
            raise UnknownIdError(f"unknown item id {item_id!r}") from None

    def label_probs(self, left_id: str, right_id: str, judge_id: str) -> np.ndarray:
        """Exact label distribution for a pair as seen by one judge."""
        if judge_id not in self.judge_gammas:
            raise UnknownIdError(f"unknown judge id {judge_id!r}")
        left, right = self._item(left_id), self._item(right_id)
        dmu = right.true_mu - left.true_mu
        dvar = left.true_sigma ** 2 + right.true_sigma ** 2
        scaled = self.judge_gammas[judge_id] * self.bound_values
        return interval_probs(np.array([dmu]), np.array([dvar]), scaled)[0]

    def sample_label(self, left_id: str, right_id: str, judge_id: str) -> int:
        """One categorical draw; deterministic under (seed, draw counter)."""
        key = (left_id, right_id, judge_id)
        cdf = self._cdf_cache.get(key)
        if cdf is None:
            cdf = np.cumsum(self.label_probs(left_id, right_id, judge_id))
            self._cdf_cache[key] = cdf
        u = self._label_rng.random()
        return int(np.searchsorted(cdf, u, side="right").clip(0, cdf.size - 1))

    def label_source(self, judges_per_pair: int) -> LabelSource:
        """Panel sampler: each pair gets distinct judges, each rating once."""
        if judges_per_pair > len(self.judge_ids):
            raise DataError(
                f"judges_per_pair={judges_per_pair} exceeds the "
                f"{len(self.judge_ids)}-judge pool"
            )

        def source(query_id: str, left_id: str, right_id: str) -> list[tuple[str, int]]:
            panel_idx = self._panel_rng.choice(
                len(self.judge_ids), size=judges_per_pair, replace=False)
            labeled = []
            for ji in sorted(panel_idx):
                judge_id = self.judge_ids[ji]
                labeled.append((judge_id, self.sample_label(left_id, right_id, judge_id)))
            return labeled

        return source

    def make_features(self, dim: int = 8, noise: float = 0.01) -> list[ItemRecord]:
        """Noisy linear embedding of the true means into feature space.

        The embedding is invertible (strictly positive slopes), so a trained
        head can in principle recover the planted ordering exactly when
        ``noise`` is 0.
        """
        rng = np.random.default_rng((self.seed, 13))
        slope = rng.uniform(0.5, 1.5, dim)
        offset = rng.uniform(0.1, 0.5, dim)
        records = []
        for item_id in sorted(self.items):
            it = self.items[item_id]
            x = offset + slope * it.true_mu
            if noise > 0.0:
                x = x + rng.normal(0.0, noise, dim)
            records.append(ItemRecord(item_id, it.query_id, x))
        return records

    def true_scores(self) -> dict[str, float]:
        return {i: it.true_mu for i, it in self.items.items()}


def generate_dataset(
    world: PlantedWorld,
    rounds: int,
    judges_per_pair: int,
    seed: int | None = None,
) -> CampaignResult:
    """Run a full swiss campaign over the world's queries with sampled panels."""
    return run_campaign(
        world.items_by_query(), rounds,
        world.label_source(judges_per_pair),
        seed=world.seed if seed is None else seed,
    )


def make_planted_world(
    num_items: int,
    num_queries: int,
    judge_gammas: dict[str, float],
    seed: int = 0,
    mu_range: tuple[float, float] = (0.2, 3.0),
    sigma_range: tuple[float, float] = (0.05, 0.25),
) -> PlantedWorld:
    """Random world with items spread across queries and uniform score draws."""
    if num_items < 2 or num_queries < 1:
        raise DataError("a world needs at least 2 items and 1 query")
    rng = np.random.default_rng((seed, 3))
    items = []
    for i in range(num_items):
        items.append(PlantedItem(
            item_id=f"item{i:04d}",
            query_id=f"q{i % num_queries:03d}",
            true_mu=float(rng.uniform(*mu_range)),
            true_sigma=float(rng.uniform(*sigma_range)),
        ))
    return PlantedWorld(items, (-1.5, -0.5, 0.5, 1.5), judge_gammas, seed=seed)


# ---------------------------------------------------------------------------
# World files (dataio text style, sectioned)
# ---------------------------------------------------------------------------

def write_world(path: str | Path, world: PlantedWorld) -> None:
    lines = [_WORLD_PRAGMA, "[seed]", str(world.seed), "[bounds]",
             "\t".join(repr(float(b)) for b in world.bound_values), "[judges]"]
    for judge_id in world.judge_ids:
        lines.append(f"{judge_id}\t{world.judge_gammas[judge_id]!r}")
    lines.append("[items]")
    lines.append("item_id\tquery_id\ttrue_mu\ttrue_sigma")
    for item_id in sorted(world.items):
        it = world.items[item_id]
        lines.append(f"{item_id}\t{it.query_id}\t{it.true_mu!r}\t{it.true_sigma!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_world(path: str | Path) -> PlantedWorld:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != _WORLD_PRAGMA:
        raise DataError(f"{path}: expected leading pragma {_WORLD_PRAGMA!r}")
    section = None
    seed = 0
    bounds: list[float] = []
    gammas: dict[str, float] = {}
    items: list[PlantedItem] = []
    for line in text[1:]:
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        if section == "seed":
            seed = int(line)
        elif section == "bounds":
            bounds = [float(v) for v in line.split("\t")]
        elif section == "judges":
            judge_id, gamma = line.split("\t")
            gammas[judge_id] = float(gamma)
        elif section == "items":
            if line.startswith("item_id"):
                continue
            item_id, query_id, mu, sigma = line.split("\t")
            items.append(PlantedItem(item_id, query_id, float(mu), float(sigma)))
        else:
            raise DataError(f"{path}: line outside any known section: {line!r}")
    return PlantedWorld(items, bounds, gammas, seed=seed)
