"""Swiss-tournament pair sampling within query groups.

Each round pairs items of similar cumulative points instead of exhausting all
O(N^2) combinations: items are grouped by current score, groups are processed
from the top down (an odd leftover spills into the next group), and a pairing
that would repeat an earlier pair slides to the next available partner in
score order.  Wins award 3.0 points for a "better" majority and 1.0 for
"slightly better"; everything else awards nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .dataio import JudgmentRecord, make_pair_id
from .errors import DataError, PairingExhausted

# canonical five-way labels: 0 "left better" ... 4 "right better"
_POINTS_LEFT = {0: 3.0, 1: 1.0}
_POINTS_RIGHT = {4: 3.0, 3: 1.0}


@dataclass
class TournamentState:
    """Bookkeeping for one query's tournament: points, rounds, used pairs."""

    query_id: str
    items: list[str]
    seed: int = 0
    max_rounds: int | None = None
    points: dict[str, float] = field(default_factory=dict)
    used_pairs: set[frozenset[str]] = field(default_factory=set)
    round_no: int = 0
    pending: list[tuple[str, str]] | None = None

    def __post_init__(self) -> None:
        if len(set(self.items)) != len(self.items):
            raise DataError(f"duplicate item ids in query {self.query_id!r}")
        for item in self.items:
            self.points.setdefault(item, 0.0)


def _score_ordered(state: TournamentState) -> list[str]:
    """Items ordered by current points (desc), seeded shuffle within a group."""
    rng = np.random.default_rng((state.seed, state.round_no))
    groups: dict[float, list[str]] = {}
    for item in state.items:
        groups.setdefault(state.points[item], []).append(item)
    ordered: list[str] = []
    for score in sorted(groups, reverse=True):
        members = sorted(groups[score])
        rng.shuffle(members)
        ordered.extend(members)
    return ordered


def _first_matching(
    order: list[str], forbidden: set[frozenset[str]]
) -> list[tuple[str, str]] | None:
    """Lexicographically-first matching of size floor(n/2) avoiding forbidden.

    Tries to pair each item, in order, with the earliest later partner that
    still lets the rest complete; with an odd count one item may sit out (the
    bye), preferring to spare the latest item possible.
    """
    target_byes = len(order) % 2

    def solve(remaining: tuple[str, ...], byes: int) -> list[tuple[str, str]] | None:
        if len(remaining) < 2:
            return [] if len(remaining) <= byes else None
        first = remaining[0]
        for j in range(1, len(remaining)):
            partner = remaining[j]
            if frozenset((first, partner)) in forbidden:
                continue
            rest = remaining[1:j] + remaining[j + 1:]
            tail = solve(rest, byes)
            if tail is not None:
                return [(first, partner)] + tail
        if byes > 0:
            return solve(remaining[1:], byes - 1)
        return None

    return solve(tuple(order), target_byes)


def next_round_pairs(state: TournamentState) -> list[tuple[str, str]]:
    """Generate the next round: exactly floor(N/2) fresh unordered pairs.

    Pairs are emitted with lexicographic item order as the canonical
    left/right orientation.  The emitted pairs are registered against the
    state and must be resolved via apply_outcomes before the round advances.
    """
    if len(state.items) < 2:
        raise DataError(f"query {state.query_id!r} has fewer than 2 items")
    if state.max_rounds is not None and state.round_no >= state.max_rounds:
        raise DataError(f"query {state.query_id!r} already ran {state.round_no} rounds")
    if state.pending is not None:
        raise DataError("previous round still awaiting outcomes")

    order = _score_ordered(state)
    matching = _first_matching(order, state.used_pairs)
    if matching is None:
        raise PairingExhausted(
            f"query {state.query_id!r} cannot form a duplicate-free round "
            f"for score groups {sorted(set(state.points.values()), reverse=True)}"
        )
    pairs = [tuple(sorted(pair)) for pair in matching]
    for a, b in pairs:
        state.used_pairs.add(frozenset((a, b)))
    state.pending = pairs
    return pairs


def majority_label(counts: Iterable[float]) -> int:
    """Plurality label of a count vector; ties resolve to the lowest index."""
    return int(np.argmax(np.asarray(list(counts))))


def apply_outcomes(
    state: TournamentState, outcomes: dict[tuple[str, str], int]
) -> TournamentState:
    """Score the pending round from per-pair majority labels and advance.

    A "better" majority awards the winner 3.0 points, "slightly better"
    awards 1.0, and "equal" awards nothing to either side.
    """
    if state.pending is None:
        raise DataError("no pending round to apply outcomes to")
    unknown = set(outcomes) - set(state.pending)
    if unknown:
        raise DataError(f"outcomes for unknown pairs: {sorted(unknown)}")
    missing = set(state.pending) - set(outcomes)
    if missing:
        raise DataError(f"missing outcomes for pairs: {sorted(missing)}")
    for (left, right), label in outcomes.items():
        if not 0 <= label <= 4:
            raise DataError(f"label {label} out of range for pair {(left, right)}")
        state.points[left] += _POINTS_LEFT.get(label, 0.0)
        state.points[right] += _POINTS_RIGHT.get(label, 0.0)
    state.round_no += 1
    state.pending = None
    return state


# A label source maps (query_id, left_item, right_item) to judge labels.
LabelSource = Callable[[str, str, str], list[tuple[str, int]]]


@dataclass
class CampaignResult:
    """All judgments generated by a campaign plus final tournament states."""

    records: list[JudgmentRecord]
    states: dict[str, TournamentState]


def run_campaign(
    items_by_query: dict[str, list[str]],
    rounds: int,
    label_source: LabelSource,
    seed: int = 0,
) -> CampaignResult:
    """Run a multi-round campaign over every query.

    Each pair is sent to ``label_source`` for judgments; the per-pair majority
    label drives the scoring that shapes the next round.  A query whose
    pairings are exhausted simply stops early, keeping every emitted pair
    duplicate-free.
    """
    records: list[JudgmentRecord] = []
    states: dict[str, TournamentState] = {}
    stamp = 0.0
    for q_index, query_id in enumerate(sorted(items_by_query)):
        state = TournamentState(
            query_id, list(items_by_query[query_id]),
            seed=int(np.random.default_rng((seed, q_index)).integers(2**31)),
            max_rounds=rounds,
        )
        states[query_id] = state
        for _ in range(rounds):
            try:
                pairs = next_round_pairs(state)
            except PairingExhausted:
                break
            outcomes: dict[tuple[str, str], int] = {}
            for left, right in pairs:
                labeled = label_source(query_id, left, right)
                counts = np.zeros(5)
                for judge_id, label in labeled:
                    records.append(JudgmentRecord(
                        pair_id=make_pair_id(query_id, left, right),
                        query_id=query_id,
                        left_item=left,
                        right_item=right,
                        judge_id=judge_id,
                        label=label,
                        presented_flipped=False,
                        timestamp=stamp,
                    ))
                    stamp += 1.0
                    counts[label] += 1
                outcomes[(left, right)] = majority_label(counts)
            apply_outcomes(state, outcomes)
    return CampaignResult(records, states)
