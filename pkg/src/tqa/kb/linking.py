"""Ground lambda mentions to KB identifiers by normalized fuzzy label matching."""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

from rapidfuzz import fuzz

from ..lambda_expr import IntervalLiteral, LambdaExpr, Predicate, StringLiteral, Variable
from ..querygen import predicate_stem
from ..temporal import TemporalRelation, TimeInterval
from .store import KbStore

DEFAULT_THRESHOLD = 0.85

_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")


def normalize(text: str) -> str:
    return " ".join(_PUNCT.sub(" ", text.casefold()).split())


def similarity(a: str, b: str) -> float:
    """Normalized indel similarity of the normalized strings, in [0, 1]."""
    return fuzz.ratio(normalize(a), normalize(b)) / 100.0


@lru_cache(maxsize=None)
def _default_predicate_table() -> dict:
    return json.loads(resources.files("tqa.data").joinpath("predicates.json").read_text())


def load_predicate_table(path: Optional[str | Path] = None) -> dict:
    """Predicate alias table: ``{name: {"relation", "roles", ["object_template"]}}``."""
    if path is None:
        return dict(_default_predicate_table())
    return json.loads(Path(path).read_text())


def default_roles(arity: int) -> tuple[str, ...]:
    if arity == 1:
        return ("subject",)
    if arity == 2:
        return ("event", "subject")
    return ("event", "subject", "object") + ("ignore",) * (arity - 3)


@dataclass(frozen=True)
class Binding:
    kb_id: str
    score: float
    label: str
    kind: str  # "entity" | "relation"


@dataclass(frozen=True)
class Const:
    """A linked KB identifier standing where a literal was."""

    id: str


Slot = Union[Variable, Const, None]


@dataclass(frozen=True)
class RelationPlan:
    relation: str
    event: Slot
    subject: Slot
    object: Slot


@dataclass(frozen=True)
class IntervalPlan:
    var: Variable
    event: Union[Variable, Const]


@dataclass(frozen=True)
class ConnectivePlan:
    relation: TemporalRelation
    left: Union[Variable, TimeInterval]
    right: Union[Variable, TimeInterval]


Plan = Union[RelationPlan, IntervalPlan, ConnectivePlan]


@dataclass(frozen=True)
class LinkedLambda:
    source: LambdaExpr
    bindings: Mapping[str, Binding]
    unresolved: tuple[str, ...]
    plans: tuple[Optional[Plan], ...] = field(default=(), compare=False)

    @property
    def complete(self) -> bool:
        return not self.unresolved

    def labels(self) -> dict[str, str]:
        return {m: b.label for m, b in self.bindings.items() if b.kind == "entity"}


class Linker:
    def __init__(self, store: KbStore, threshold: float = DEFAULT_THRESHOLD,
                 predicate_table: Optional[Mapping] = None,
                 entity_matcher: Optional[Callable[[str], Optional[Binding]]] = None):
        self.store = store
        self._entity_matcher = entity_matcher
        self.threshold = threshold
        self.table = _default_predicate_table() if predicate_table is None else predicate_table
        self._entity_index = [
            (e.id, e.label, (e.label,) + e.aliases) for e in store.entities.values()
        ]
        self._relation_index = [
            (r.id, r.label, (r.id, r.label) + r.aliases) for r in store.relations.values()
        ]

    def match_entity(self, mention: str) -> Optional[Binding]:
        if self._entity_matcher is not None:
            return self._entity_matcher(mention)
        return self._best(mention, self._entity_index, "entity")

    def match_relation(self, name: str) -> Optional[Binding]:
        entry = self.table.get(name)
        if entry is not None:
            rel = entry["relation"]
            label = self.store.relations[rel].label if rel in self.store.relations else rel
            return Binding(rel, 1.0, label, "relation")
        if name in self.store.relation_ids():
            return Binding(name, 1.0, name, "relation")
        return self._best(predicate_stem(name), self._relation_index, "relation")

    def _best(self, mention: str, index, kind: str) -> Optional[Binding]:
        best: Optional[tuple[float, str, str]] = None
        for kb_id, label, names in index:
            score = max(similarity(mention, n) for n in names)
            # ties: score desc, id asc
            if best is None or score > best[0] or (score == best[0] and kb_id < best[1]):
                best = (score, kb_id, label)
        if best is None or best[0] < self.threshold:
            return None
        return Binding(best[1], best[0], best[2], kind)

    def link(self, expr: LambdaExpr) -> LinkedLambda:
        bindings: dict[str, Binding] = {}
        unresolved: list[str] = []
        plans: list[Optional[Plan]] = []

        def resolve(mention: str, kind: str = "entity") -> Optional[Const]:
            if mention in bindings:
                return Const(bindings[mention].kb_id)
            if mention in unresolved:
                return None
            b = self.match_entity(mention) if kind == "entity" else self.match_relation(mention)
            if b is None:
                unresolved.append(mention)
                return None
            bindings[mention] = b
            return Const(b.kb_id)

        for p in expr.predicates:
            if p.is_connective:
                args = [a.value if isinstance(a, IntervalLiteral) else a for a in p.args]
                plans.append(ConnectivePlan(TemporalRelation.from_name(p.name), *args))
            elif p.is_interval:
                var, ev = p.args
                target = resolve(ev.value) if isinstance(ev, StringLiteral) else ev
                plans.append(IntervalPlan(var, target) if target is not None else None)
            else:
                plans.append(self._relation_plan(p, resolve, unresolved))
        return LinkedLambda(expr, bindings, tuple(unresolved), tuple(plans))

    def _relation_plan(self, p: Predicate, resolve, unresolved: list[str]) -> Optional[RelationPlan]:
        entry = self.table.get(p.name)
        roles = tuple(entry["roles"]) if entry else default_roles(len(p.args))
        rel = resolve(p.name, "relation")
        if len(roles) != len(p.args):
            if p.name not in unresolved:
                unresolved.append(p.name)
            return None
        slots: dict[str, Slot] = {"event": None, "subject": None, "object": None}
        ok = rel is not None
        object_args = [a for r, a in zip(roles, p.args) if r == "object"]
        template = entry.get("object_template") if entry else None
        if len(object_args) > 1:
            if not template or not all(isinstance(a, StringLiteral) for a in object_args):
                if p.name not in unresolved:
                    unresolved.append(p.name)
                return None
            mention = template.format(*(a.value for a in object_args))
            slots["object"] = resolve(mention)
            ok = ok and slots["object"] is not None
        for role, arg in zip(roles, p.args):
            if role == "ignore" or (role == "object" and len(object_args) > 1):
                continue
            if isinstance(arg, StringLiteral):
                const = resolve(arg.value)
                ok = ok and const is not None
                slots[role] = const
            else:
                slots[role] = arg
        return RelationPlan(rel.id, slots["event"], slots["subject"], slots["object"]) if ok else None


def link(expr: LambdaExpr, store: KbStore, threshold: float = DEFAULT_THRESHOLD,
         predicate_table: Optional[Mapping] = None) -> LinkedLambda:
    return Linker(store, threshold, predicate_table).link(expr)
