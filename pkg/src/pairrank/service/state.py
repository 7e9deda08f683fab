"""Runtime state of labeling campaigns.

All mutations to one campaign are serialized through its lock; judgments are
additionally appended to a JSONL log that is replayed at startup, so a
restarted service resumes exactly where it stopped (pair generation is
deterministic under the manifest seed, presentations are ephemeral).
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataio import JudgmentRecord, canonicalize_label, judgments_to_text, make_pair_id
from ..errors import ConflictError, DataError, PairingExhausted, UnknownIdError
from ..tournament import TournamentState, apply_outcomes, majority_label, next_round_pairs
from .schemas import CampaignManifest, CampaignStatus, QueryStatus

DEFAULT_PRESENTATION_TTL = 600.0


@dataclass
class ServiceConfig:
    log_path: Path | None = None
    images_dir: Path | None = None
    ui_dir: Path | None = None
    presentation_ttl: float = DEFAULT_PRESENTATION_TTL


@dataclass
class Presentation:
    presentation_id: str
    campaign_id: str
    pair_id: str
    judge_id: str
    flipped: bool
    issued_at: float


@dataclass
class PairRuntime:
    pair_id: str
    query_id: str
    left_item: str
    right_item: str
    round_no: int
    records: list[JudgmentRecord] = field(default_factory=list)
    outstanding: dict[str, str] = field(default_factory=dict)  # pres_id -> judge

    def counts(self) -> np.ndarray:
        counts = np.zeros(5)
        for r in self.records:
            counts[r.label] += 1
        return counts


class Campaign:
    """One labeling campaign: tournament states per query plus judgment log."""

    def __init__(self, campaign_id: str, manifest: CampaignManifest):
        self.campaign_id = campaign_id
        self.rounds_target = manifest.rounds
        self.judges_per_pair = manifest.judges_per_pair
        self.seed = manifest.seed
        self.lock = threading.RLock()
        self.image_urls: dict[str, str] = {}
        items_by_query: dict[str, list[str]] = {}
        for item in manifest.items:
            if item.item_id in self.image_urls:
                raise DataError(f"duplicate item id {item.item_id!r} in manifest")
            self.image_urls[item.item_id] = item.image_url or f"/images/{item.item_id}"
            items_by_query.setdefault(item.query_id, []).append(item.item_id)
        for query_id, ids in items_by_query.items():
            if len(ids) < 2:
                raise DataError(f"query {query_id!r} needs at least 2 items")
        self.states: dict[str, TournamentState] = {}
        for q_index, query_id in enumerate(sorted(items_by_query)):
            self.states[query_id] = TournamentState(
                query_id, sorted(items_by_query[query_id]),
                seed=int(np.random.default_rng((manifest.seed, q_index)).integers(2**31)),
                max_rounds=manifest.rounds,
            )
        self.exhausted: set[str] = set()
        self.round_no = 0
        self.current: list[PairRuntime] = []
        self.pairs: dict[str, PairRuntime] = {}
        self.judged: set[tuple[str, str]] = set()
        self.records: list[JudgmentRecord] = []
        self.done = False
        self._flip_rng = np.random.default_rng((manifest.seed, 101))
        self._pres_counter = 0
        self._start_round()

    # -- round machinery ----------------------------------------------------

    def _start_round(self) -> None:
        self.round_no += 1
        self.current = []
        for query_id in sorted(self.states):
            if query_id in self.exhausted:
                continue
            state = self.states[query_id]
            try:
                emitted = next_round_pairs(state)
            except PairingExhausted:
                self.exhausted.add(query_id)
                continue
            for left, right in emitted:
                pair = PairRuntime(
                    pair_id=make_pair_id(query_id, left, right),
                    query_id=query_id, left_item=left, right_item=right,
                    round_no=self.round_no,
                )
                self.current.append(pair)
                self.pairs[pair.pair_id] = pair
        if not self.current:
            self.round_no -= 1
            self.done = True

    def _round_complete(self) -> bool:
        return all(len(p.records) >= self.judges_per_pair for p in self.current)

    def _finish_round(self) -> None:
        by_query: dict[str, dict[tuple[str, str], int]] = {}
        for pair in self.current:
            by_query.setdefault(pair.query_id, {})[
                (pair.left_item, pair.right_item)
            ] = majority_label(pair.counts())
        for query_id, outcomes in by_query.items():
            apply_outcomes(self.states[query_id], outcomes)
        if self.round_no >= self.rounds_target:
            self.done = True
            self.current = []
        else:
            self._start_round()

    # -- presentations -------------------------------------------------------

    def _expire_presentations(self, registry: "Registry", now: float) -> None:
        ttl = registry.config.presentation_ttl
        for pair in self.current:
            for pres_id in list(pair.outstanding):
                pres = registry.presentations.get(pres_id)
                if pres is None or now - pres.issued_at > ttl:
                    pair.outstanding.pop(pres_id, None)
                    registry.presentations.pop(pres_id, None)
                    registry.expired.add(pres_id)

    def next_presentation(self, registry: "Registry", judge_id: str) -> Presentation | None:
        now = time.time()
        self._expire_presentations(registry, now)
        for pair in self.current:
            need = self.judges_per_pair - len(pair.records) - len(pair.outstanding)
            if need <= 0:
                continue
            if (pair.pair_id, judge_id) in self.judged:
                continue
            if judge_id in pair.outstanding.values():
                continue
            self._pres_counter += 1
            pres = Presentation(
                presentation_id=f"{self.campaign_id}-p{self._pres_counter}",
                campaign_id=self.campaign_id,
                pair_id=pair.pair_id,
                judge_id=judge_id,
                flipped=bool(self._flip_rng.random() < 0.5),
                issued_at=now,
            )
            pair.outstanding[pres.presentation_id] = judge_id
            registry.presentations[pres.presentation_id] = pres
            return pres
        return None

    # -- judgments ------------------------------------------------------------

    def apply_judgment(
        self,
        pair_id: str,
        judge_id: str,
        raw_label: int,
        flipped: bool,
        timestamp: float,
    ) -> tuple[JudgmentRecord, bool]:
        """Record one judgment (canonical orientation); advance if complete."""
        pair = self.pairs.get(pair_id)
        if pair is None:
            raise UnknownIdError(f"unknown pair {pair_id!r}")
        if pair.round_no != self.round_no:
            raise ConflictError(f"pair {pair_id!r} belongs to a closed round")
        if (pair_id, judge_id) in self.judged:
            raise ConflictError(f"judge {judge_id!r} already rated pair {pair_id!r}")
        record = JudgmentRecord(
            pair_id=pair_id,
            query_id=pair.query_id,
            left_item=pair.left_item,
            right_item=pair.right_item,
            judge_id=judge_id,
            label=canonicalize_label(raw_label, flipped),
            presented_flipped=flipped,
            timestamp=timestamp,
        )
        pair.records.append(record)
        self.records.append(record)
        self.judged.add((pair_id, judge_id))
        advanced = False
        if self._round_complete():
            self._finish_round()
            advanced = True
        return record, advanced

    # -- views ----------------------------------------------------------------

    def status(self) -> CampaignStatus:
        in_round = len(self.current)
        completed = sum(
            1 for p in self.current if len(p.records) >= self.judges_per_pair)
        judgments_in_round = sum(len(p.records) for p in self.current)
        return CampaignStatus(
            campaign_id=self.campaign_id,
            round=self.round_no,
            rounds_target=self.rounds_target,
            judges_per_pair=self.judges_per_pair,
            done=self.done,
            pairs_in_round=in_round,
            pairs_completed_in_round=completed,
            judgments_in_round=judgments_in_round,
            judgments_needed_in_round=in_round * self.judges_per_pair,
            judgments_total=len(self.records),
            queries=[
                QueryStatus(
                    query_id=q,
                    rounds_completed=self.states[q].round_no,
                    exhausted=q in self.exhausted,
                ) for q in sorted(self.states)
            ],
        )

    def export_text(self) -> str:
        return judgments_to_text(self.records)


class Registry:
    """All campaigns and judges known to one service process."""

    def __init__(self, config: ServiceConfig | None = None):
        self.config = config or ServiceConfig()
        self.lock = threading.RLock()
        self.campaigns: dict[str, Campaign] = {}
        self.judges: dict[str, str] = {}
        self.presentations: dict[str, Presentation] = {}
        self.submitted: set[str] = set()
        self.expired: set[str] = set()
        self._campaign_counter = 0
        if self.config.log_path is not None:
            self._replay_log(self.config.log_path)

    # -- persistence ----------------------------------------------------------

    def _log_event(self, event: dict) -> None:
        if self.config.log_path is None:
            return
        with self.lock:
            with open(self.config.log_path, "a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay_log(self, path: Path) -> None:
        path = Path(path)
        if not path.exists():
            return
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path}:{lineno}: corrupt log line: {err}") from err
            kind = event.get("event")
            if kind == "campaign":
                manifest = CampaignManifest(**event["manifest"])
                self._create_campaign(manifest, log=False)
            elif kind == "judge":
                self.judges[event["judge_id"]] = event.get("name") or ""
            elif kind == "judgment":
                campaign = self.campaigns[event["campaign_id"]]
                campaign.apply_judgment(
                    event["pair_id"], event["judge_id"], event["raw_label"],
                    event["flipped"], event["timestamp"],
                )
            else:
                raise DataError(f"{path}:{lineno}: unknown event {kind!r}")

    # -- campaign / judge management -------------------------------------------

    def _create_campaign(self, manifest: CampaignManifest, log: bool = True) -> Campaign:
        with self.lock:
            self._campaign_counter += 1
            campaign_id = manifest.campaign_id or f"campaign-{self._campaign_counter}"
            if campaign_id in self.campaigns:
                raise ConflictError(f"campaign {campaign_id!r} already exists")
            manifest = manifest.model_copy(update={"campaign_id": campaign_id})
            campaign = Campaign(campaign_id, manifest)
            self.campaigns[campaign_id] = campaign
        if log:
            self._log_event({"event": "campaign",
                             "manifest": manifest.model_dump()})
        return campaign

    def create_campaign(self, manifest: CampaignManifest) -> Campaign:
        return self._create_campaign(manifest)

    def register_judge(self, name: str | None = None) -> str:
        with self.lock:
            judge_id = f"judge-{secrets.token_hex(6)}"
            self.judges[judge_id] = name or ""
        self._log_event({"event": "judge", "judge_id": judge_id, "name": name or ""})
        return judge_id

    def campaign(self, campaign_id: str) -> Campaign:
        try:
            return self.campaigns[campaign_id]
        except KeyError:
            raise UnknownIdError(f"unknown campaign {campaign_id!r}") from None

    def require_judge(self, judge_id: str) -> None:
        if judge_id not in self.judges:
            raise UnknownIdError(f"unknown judge {judge_id!r}")

    # -- judgment submission -----------------------------------------------------

    def submit_judgment(self, presentation_id: str, judge_id: str, raw_label: int):
        if presentation_id in self.submitted:
            raise ConflictError(f"presentation {presentation_id!r} already submitted")
        if presentation_id in self.expired:
            raise ConflictError(f"presentation {presentation_id!r} expired")
        pres = self.presentations.get(presentation_id)
        if pres is None:
            raise UnknownIdError(f"unknown presentation {presentation_id!r}")
        if judge_id != pres.judge_id:
            raise ConflictError("presentation belongs to a different judge")
        campaign = self.campaign(pres.campaign_id)
        with campaign.lock:
            now = time.time()
            if now - pres.issued_at > self.config.presentation_ttl:
                self.presentations.pop(presentation_id, None)
                campaign.pairs[pres.pair_id].outstanding.pop(presentation_id, None)
                raise ConflictError(f"presentation {presentation_id!r} expired")
            record, advanced = campaign.apply_judgment(
                pres.pair_id, judge_id, raw_label, pres.flipped, now)
            campaign.pairs[pres.pair_id].outstanding.pop(presentation_id, None)
            self.presentations.pop(presentation_id, None)
            self.submitted.add(presentation_id)
        self._log_event({
            "event": "judgment",
            "campaign_id": campaign.campaign_id,
            "pair_id": record.pair_id,
            "judge_id": judge_id,
            "raw_label": raw_label,
            "flipped": pres.flipped,
            "timestamp": record.timestamp,
        })
        return campaign, record, advanced
