"""Request/response models for the labeling service API."""

from __future__ import annotations

from pydantic import BaseModel, Field

LABEL_NAMES = [
    "left better",
    "left slightly better",
    "equal",
    "right slightly better",
    "right better",
]


class CampaignItem(BaseModel):
    item_id: str
    query_id: str
    image_url: str | None = None


class CampaignManifest(BaseModel):
    campaign_id: str | None = None
    rounds: int = Field(ge=1)
    judges_per_pair: int = Field(ge=1)
    seed: int = 0
    items: list[CampaignItem]


class CampaignCreated(BaseModel):
    campaign_id: str
    num_queries: int
    num_items: int
    round: int
    pairs_in_round: int


class JudgeRegistration(BaseModel):
    name: str | None = None


class JudgeCreated(BaseModel):
    judge_id: str


class PresentationOut(BaseModel):
    presentation_id: str
    pair_id: str
    left_image: str
    right_image: str
    round: int
    labels: list[str] = LABEL_NAMES


class NextResponse(BaseModel):
    presentation: PresentationOut | None = None
    waiting: bool = False
    done: bool = False


class JudgmentIn(BaseModel):
    presentation_id: str
    judge_id: str
    label: int = Field(ge=0, le=4, description="on-screen label index")


class JudgmentAck(BaseModel):
    pair_id: str
    canonical_label: int
    round_advanced: bool
    campaign_done: bool


class QueryStatus(BaseModel):
    query_id: str
    rounds_completed: int
    exhausted: bool


class CampaignStatus(BaseModel):
    campaign_id: str
    round: int
    rounds_target: int
    judges_per_pair: int
    done: bool
    pairs_in_round: int
    pairs_completed_in_round: int
    judgments_in_round: int
    judgments_needed_in_round: int
    judgments_total: int
    queries: list[QueryStatus]
