"""Thin HTTP client for the labeling service.

Mirrors the service endpoints one-to-one; used by scripted judge sessions
and by tests that drive a live server.
"""

from __future__ import annotations

import httpx


class LabelServiceClient:
    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=30.0)

    def _check(self, response: httpx.Response) -> dict:
        response.raise_for_status()
        return response.json()

    def create_campaign(self, manifest: dict) -> dict:
        return self._check(self._client.post(f"{self.base_url}/campaigns", json=manifest))

    def register_judge(self, name: str | None = None) -> str:
        payload = {"name": name} if name else {}
        data = self._check(self._client.post(f"{self.base_url}/judges", json=payload))
        return data["judge_id"]

    def next_presentation(self, campaign_id: str, judge_id: str) -> dict:
        return self._check(self._client.get(
            f"{self.base_url}/campaigns/{campaign_id}/next", params={"judge": judge_id}))

    def submit_judgment(self, presentation_id: str, judge_id: str, label: int) -> dict:
        return self._check(self._client.post(f"{self.base_url}/judgments", json={
            "presentation_id": presentation_id, "judge_id": judge_id, "label": label}))

    def status(self, campaign_id: str) -> dict:
        return self._check(self._client.get(
            f"{self.base_url}/campaigns/{campaign_id}/status"))

    def export(self, campaign_id: str) -> str:
        response = self._client.get(f"{self.base_url}/campaigns/{campaign_id}/export")
        response.raise_for_status()
        return response.text

    def close(self) -> None:
        self._client.close()
