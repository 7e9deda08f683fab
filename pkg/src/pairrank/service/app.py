"""HTTP surface of the labeling service.

JSON endpoints:

* ``POST /campaigns``               create a campaign from a manifest
* ``POST /judges``                  register a judge, returns a bearer id
* ``GET  /campaigns/{id}/next``     next presentation for ``?judge=...``
* ``POST /judgments``               submit an on-screen label
* ``GET  /campaigns/{id}/export``   judgments file in canonical orientation
* ``GET  /campaigns/{id}/status``   round and progress counters

Image bytes are served untouched from a static directory keyed by item id;
the optional UI mount serves the compiled browser frontend.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..errors import ConfigError, ConflictError, DataError, UnknownIdError
from .schemas import (
    CampaignCreated,
    CampaignManifest,
    CampaignStatus,
    JudgeCreated,
    JudgeRegistration,
    JudgmentAck,
    JudgmentIn,
    NextResponse,
    PresentationOut,
)
from .state import Registry, ServiceConfig


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    registry = Registry(config)
    app = FastAPI(title="pairrank labeling service", version="1")
    app.state.registry = registry
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    @app.exception_handler(UnknownIdError)
    async def _unknown(request: Request, exc: UnknownIdError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(DataError)
    async def _bad_data(request: Request, exc: DataError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ConfigError)
    async def _bad_config(request: Request, exc: ConfigError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/campaigns", response_model=CampaignCreated)
    def create_campaign(manifest: CampaignManifest) -> CampaignCreated:
        campaign = registry.create_campaign(manifest)
        return CampaignCreated(
            campaign_id=campaign.campaign_id,
            num_queries=len(campaign.states),
            num_items=len(campaign.image_urls),
            round=campaign.round_no,
            pairs_in_round=len(campaign.current),
        )

    @app.post("/judges", response_model=JudgeCreated)
    def register_judge(registration: JudgeRegistration | None = None) -> JudgeCreated:
        name = registration.name if registration else None
        return JudgeCreated(judge_id=registry.register_judge(name))

    @app.get("/campaigns/{campaign_id}/next", response_model=NextResponse)
    def next_presentation(campaign_id: str, judge: str) -> NextResponse:
        registry.require_judge(judge)
        campaign = registry.campaign(campaign_id)
        with campaign.lock:
            if campaign.done:
                return NextResponse(done=True)
            pres = campaign.next_presentation(registry, judge)
            if pres is None:
                return NextResponse(waiting=True)
            pair = campaign.pairs[pres.pair_id]
            left, right = pair.left_item, pair.right_item
            if pres.flipped:
                left, right = right, left
            return NextResponse(presentation=PresentationOut(
                presentation_id=pres.presentation_id,
                pair_id=pres.pair_id,
                left_image=campaign.image_urls[left],
                right_image=campaign.image_urls[right],
                round=pair.round_no,
            ))

    @app.post("/judgments", response_model=JudgmentAck)
    def submit_judgment(judgment: JudgmentIn) -> JudgmentAck:
        registry.require_judge(judgment.judge_id)
        campaign, record, advanced = registry.submit_judgment(
            judgment.presentation_id, judgment.judge_id, judgment.label)
        return JudgmentAck(
            pair_id=record.pair_id,
            canonical_label=record.label,
            round_advanced=advanced,
            campaign_done=campaign.done,
        )

    @app.get("/campaigns/{campaign_id}/export", response_class=PlainTextResponse)
    def export(campaign_id: str) -> str:
        campaign = registry.campaign(campaign_id)
        with campaign.lock:
            return campaign.export_text()

    @app.get("/campaigns/{campaign_id}/status", response_model=CampaignStatus)
    def status(campaign_id: str) -> CampaignStatus:
        campaign = registry.campaign(campaign_id)
        with campaign.lock:
            return campaign.status()

    if registry.config.images_dir is not None:
        app.mount("/images", StaticFiles(directory=registry.config.images_dir),
                  name="images")
    if registry.config.ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=registry.config.ui_dir, html=True),
                  name="ui")
    return app
