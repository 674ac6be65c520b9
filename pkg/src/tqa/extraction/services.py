"""HTTP clients for optional remote re-ranking and reading-comprehension services."""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from typing import Optional

import requests

from ..querygen import TextQuery
from .corpus import Passage

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 30.0


class ServiceError(Exception):
    pass


def post_json(url: str, payload: dict, timeout: float) -> dict:
    try:
        resp = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise ServiceError(f"{url}: {exc}") from exc
    if resp.status_code >= 400:
        raise ServiceError(f"{url}: HTTP {resp.status_code}")
    try:
        body = resp.json()
    except (ValueError, json.JSONDecodeError) as exc:
        raise ServiceError(f"{url}: response is not JSON") from exc
    if not isinstance(body, dict):
        raise ServiceError(f"{url}: expected a JSON object")
    return body


class RemoteReranker:
    """POST ``{"query","passages"}`` and read back ``{"scores"}``, one per passage."""

    def __init__(self, url: str, timeout: float = DEFAULT_TIMEOUT_S):
        self.url = url
        self.timeout = timeout

    def rerank(self, query: TextQuery, passages: list[Passage]) -> list[Passage]:
        if not passages:
            return []
        body = post_json(self.url, {"query": query.text, "passages": [p.text for p in passages]},
                         self.timeout)
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(passages):
            raise ServiceError(f"{self.url}: expected {len(passages)} scores")
        return [replace(p, score=float(s)) for p, s in zip(passages, scores)]


class RemoteReader:
    """POST ``{"query","context"}`` and read back ``{"answer","sentence"}``."""

    def __init__(self, url: str, timeout: float = DEFAULT_TIMEOUT_S):
        self.url = url
        self.timeout = timeout

    def read(self, query: TextQuery, context: str) -> tuple[str, Optional[str]]:
        body = post_json(self.url, {"query": query.text, "context": context}, self.timeout)
        answer = body.get("answer")
        if not isinstance(answer, str):
            raise ServiceError(f"{self.url}: missing answer")
        sentence = body.get("sentence")
        return answer, sentence if isinstance(sentence, str) else None
