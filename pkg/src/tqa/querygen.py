"""Render aux / instantiated-main lambda components as "When ..." questions."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .lambda_expr import LambdaExpr, Predicate, StringLiteral, Variable

_SENSE_RE = re.compile(r"-\d+$")


class UnrenderableLambda(ValueError):
    pass


class QueryKind(enum.Enum):
    ENTITY_BASED = "entity-based"
    TRIPLE_BASED = "triple-based"


class QuerySource(enum.Enum):
    AUX = "aux"
    MAIN_CANDIDATE = "main-candidate"


@dataclass(frozen=True)
class TextQuery:
    text: str
    kind: QueryKind
    source: QuerySource
    entities: tuple[str, ...] = field(default_factory=tuple)


@lru_cache(maxsize=None)
def _default_verbs() -> dict:
    return json.loads(resources.files("tqa.data").joinpath("verbs.json").read_text())


def load_verb_table(path: Optional[str | Path] = None) -> dict:
    """Verb table: ``{stem: {"form": "was"|"did", "surface": text}}``."""
    if path is None:
        return dict(_default_verbs())
    table = json.loads(Path(path).read_text())
    for stem, entry in table.items():
        if entry.get("form") not in ("was", "did") or not entry.get("surface"):
            raise ValueError(f"bad verb table entry for {stem!r}: {entry}")
    return table


def predicate_stem(name: str) -> str:
    return _SENSE_RE.sub("", name)


def lambda_to_query(
    expr: LambdaExpr,
    labels: Optional[Mapping[str, str]] = None,
    verbs: Optional[Mapping[str, dict]] = None,
    source: Optional[QuerySource] = None,
) -> TextQuery:
    """Build the NL query for an aux-λ or a candidate-instantiated main-λ.

    ``labels`` maps literal mentions to the KB label they were linked to;
    linked mentions are rendered with that label.
    """
    verbs = _default_verbs() if verbs is None else verbs
    labels = labels or {}

    def name(lit: StringLiteral) -> str:
        return labels.get(lit.value, lit.value)

    intervals = [p for p in expr.predicates if p.is_interval and p.args[0] == expr.unknown]
    if len(intervals) != 1:
        raise UnrenderableLambda(f"no interval predicate bound by {expr.unknown.name}: {expr}")
    event = intervals[0].args[1]
    others = [p for p in expr.predicates if not p.is_interval and not p.is_connective]

    if isinstance(event, StringLiteral):
        if others:
            raise UnrenderableLambda(f"entity-based event with extra predicates: {expr}")
        return TextQuery(
            f"When was {name(event)}?", QueryKind.ENTITY_BASED,
            source or QuerySource.AUX, (event.value,),
        )

    event_preds = [p for p in others if p.args and p.args[0] == event]
    if len(event_preds) != 1 or len(others) != 1:
        raise UnrenderableLambda(f"cannot find a single event predicate for {event.name}: {expr}")
    pred = event_preds[0]
    args = pred.args[1:]
    if not args or not all(isinstance(a, StringLiteral) for a in args):
        raise UnrenderableLambda(f"event predicate has unbound arguments: {expr}")
    rendered = [name(a) for a in args]
    entities = tuple(a.value for a in args)
    stem = predicate_stem(pred.name)

    if stem == "have-org-role":
        if len(rendered) != 3:
            raise UnrenderableLambda(f"have-org-role expects person, org, role: {expr}")
        person, org, role = rendered
        text = f"When was {person} {role} of {org}?"
        return TextQuery(text, QueryKind.TRIPLE_BASED, source or QuerySource.MAIN_CANDIDATE, entities)

    entry = verbs.get(stem, {"form": "did", "surface": stem})
    tail = " ".join(rendered[1:])
    text = f"When {entry['form']} {rendered[0]} {entry['surface']}"
    text += f" {tail}?" if tail else "?"
    return TextQuery(text, QueryKind.TRIPLE_BASED, source or QuerySource.AUX, entities)
