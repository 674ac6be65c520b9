"""Remote SPARQL endpoint client and a KB backend that answers through it."""

from __future__ import annotations

import json
import logging
from typing import Mapping, Optional

import requests

from ..answers import AnswerSet, FailureTag
from ..lambda_expr import LambdaExpr, Variable, decompose, reform_lambda
from ..temporal import CalendarPoint, TemporalError, compose_aux_intervals
from .linking import (
    Binding,
    ConnectivePlan,
    DEFAULT_THRESHOLD,
    LinkedLambda,
    Linker,
    similarity,
)
from .sparql import MalformedResponse, PREFIXES, answerset_from_results, generate_sparql
from .store import KbStore, StoreUnavailable, TimeProperties

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 30.0


def _post(sparql: str, endpoint: str, timeout: float) -> dict:
    try:
        resp = requests.post(
            endpoint,
            data={"query": sparql, "format": "json"},
            headers={"Accept": "application/sparql-results+json"},
            timeout=timeout,
        )
    except requests.RequestException as exc:
        raise StoreUnavailable(f"{endpoint}: {exc}") from exc
    if resp.status_code >= 400:
        raise StoreUnavailable(f"{endpoint}: HTTP {resp.status_code}")
    try:
        return resp.json()
    except (ValueError, json.JSONDecodeError) as exc:
        raise MalformedResponse(f"{endpoint}: response is not JSON") from exc


def query_endpoint(sparql: str, endpoint: str, timeout: float = DEFAULT_TIMEOUT_S) -> AnswerSet:
    """Run a query remotely and read the JSON bindings into an AnswerSet."""
    return answerset_from_results(sparql, _post(sparql, endpoint, timeout))


class EndpointKb:
    """KB backend over a remote SPARQL endpoint.

    Entity mentions are linked with a case-insensitive label/alias lookup on
    the endpoint, scored with the same similarity as local linking.
    """

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT_S,
                 threshold: float = DEFAULT_THRESHOLD, predicate_table: Optional[Mapping] = None,
                 time_props: TimeProperties = TimeProperties()):
        self.endpoint = endpoint
        self.timeout = timeout
        self.threshold = threshold
        self.time_props = time_props
        self._linker = Linker(KbStore([], []), threshold, predicate_table,
                              entity_matcher=self._lookup)
        self._cache: dict[str, Optional[Binding]] = {}

    def _lookup(self, mention: str) -> Optional[Binding]:
        if mention in self._cache:
            return self._cache[mention]
        needle = json.dumps(mention.lower())
        best: Optional[Binding] = None
        for prop in ("rdfs:label", "skos:altLabel"):
            q = (
                "\n".join(f"PREFIX {k}: <{v}>" for k, v in PREFIXES.items())
                + f"\nSELECT DISTINCT ?e ?name ?label WHERE {{\n  ?e {prop} ?name .\n"
                + "  ?e rdfs:label ?label .\n"
                + f"  FILTER(LCASE(STR(?name)) = {needle})\n}}\n"
            )
            rows = _post(q, self.endpoint, self.timeout)["results"]["bindings"]
            for row in rows:
                eid = row["e"]["value"].rsplit("/", 1)[-1]
                score = similarity(mention, row["name"]["value"])
                cand = Binding(eid, score, row["label"]["value"], "entity")
                if best is None or score > best.score or (score == best.score and eid < best.kb_id):
                    best = cand
        if best is not None and best.score < self.threshold:
            best = None
        self._cache[mention] = best
        return best

    def link(self, expr: LambdaExpr) -> LinkedLambda:
        return self._linker.link(expr)

    def answer(self, linked: LinkedLambda, today: Optional[CalendarPoint] = None) -> AnswerSet:
        if linked.unresolved:
            return AnswerSet.failed(
                FailureTag.LINKING_FAILURE, "unresolved: " + ", ".join(linked.unresolved))
        conns = [p for p in linked.plans if isinstance(p, ConnectivePlan)]
        if any(isinstance(c.left, Variable) and isinstance(c.right, Variable) for c in conns):
            d = decompose(linked.source)
            if d.aux is not None:
                aux = self.answer(self.link(d.aux), today)
                if not aux:
                    return aux
                try:
                    interval = compose_aux_intervals(aux.intervals())
                except TemporalError as exc:
                    return AnswerSet.failed(FailureTag.MISSING_FACTS, f"aux intervals: {exc}")
                return self.answer(self.link(reform_lambda(linked.source, interval)), today)
        sparql = generate_sparql(linked, today, self.time_props)
        logger.debug("endpoint query:\n%s", sparql)
        return query_endpoint(sparql, self.endpoint, self.timeout)

    def answer_expr(self, expr: LambdaExpr, today: Optional[CalendarPoint] = None) -> AnswerSet:
        return self.answer(self.link(expr), today)
