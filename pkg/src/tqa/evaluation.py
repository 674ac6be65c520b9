"""Batch evaluation: datasets, answer matching, macro metrics and KB ablation."""

from __future__ import annotations

import enum
import json
import logging
import re
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from rapidfuzz import fuzz

from .extraction import Corpus
from .extraction.text import parse_date_text
from .kb.store import TIME_KINDS, KbEntity, KbFact, KbStore
from .lambda_expr import LambdaError, parse_lambda
from .orchestrator import (
    AnswerTrace,
    KbBackend,
    Mode,
    Orchestrator,
    OrchestratorConfig,
    Verdict,
)
from .questions import UnsupportedQuestion, parse_question

logger = logging.getLogger(__name__)

APPROX_THRESHOLD = 0.90


class DatasetFormatError(ValueError):
    pass


class AblationError(ValueError):
    pass


class UnknownFactId(AblationError):
    pass


class MatchMode(enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"


# ------------------------------------------------------------------ matching

_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")


def normalize_answer(text: str) -> str:
    return " ".join(_PUNCT.sub("", text.casefold()).split())


def match(pred: str, gold: str, mode: MatchMode = MatchMode.EXACT) -> bool:
    if normalize_answer(pred) == normalize_answer(gold):
        return True
    if mode is MatchMode.EXACT:
        return False
    a, b = _PUNCT.sub(" ", pred.casefold()), _PUNCT.sub(" ", gold.casefold())
    if fuzz.token_sort_ratio(a, b) / 100.0 >= APPROX_THRESHOLD:
        return True
    pa, pb = _date_year(pred), _date_year(gold)
    return pa is not None and pa == pb


def _date_year(text: str) -> Optional[int]:
    point = parse_date_text(text)
    return point.year if point is not None else None


@dataclass(frozen=True)
class ItemScore:
    precision: float
    recall: float
    f1: float
    matched: tuple[tuple[str, str], ...] = ()


def score_item(pred: Iterable[str], gold: Iterable[str],
               mode: MatchMode = MatchMode.EXACT) -> ItemScore:
    """Greedy one-to-one alignment in sorted order, then P/R/F1."""
    pred = sorted(set(pred), key=lambda s: (normalize_answer(s), s))
    gold = sorted(set(gold), key=lambda s: (normalize_answer(s), s))
    if not gold:
        raise ValueError("gold answers must be nonempty")
    free = list(gold)
    pairs = []
    for p in pred:
        for g in free:
            if match(p, g, mode):
                pairs.append((p, g))
                free.remove(g)
                break
    precision = len(pairs) / len(pred) if pred else 0.0
    recall = len(pairs) / len(gold)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ItemScore(precision, recall, f1, tuple(pairs))


# ------------------------------------------------------------------- dataset


@dataclass(frozen=True)
class DatasetItem:
    id: str
    gold_answers: tuple[str, ...]
    question: Optional[str] = None
    lambda_: Optional[str] = None
    notes: Optional[str] = None

    def __post_init__(self):
        if not self.question and not self.lambda_:
            raise DatasetFormatError(f"item {self.id}: needs a question or a lambda")
        if not self.gold_answers:
            raise DatasetFormatError(f"item {self.id}: gold_answers is empty")

    @classmethod
    def from_dict(cls, row: Mapping) -> "DatasetItem":
        if not isinstance(row, Mapping):
            raise DatasetFormatError("item is not an object")
        gold = row.get("gold_answers")
        if not isinstance(gold, list) or not all(isinstance(g, str) for g in gold):
            raise DatasetFormatError(f"item {row.get('id')}: gold_answers must be a list of text")
        if "id" not in row:
            raise DatasetFormatError("item has no id")
        return cls(str(row["id"]), tuple(gold), row.get("question"), row.get("lambda"),
                   row.get("notes"))

    def to_dict(self) -> dict:
        out = {"id": self.id, "gold_answers": list(self.gold_answers)}
        for key, value in (("question", self.question), ("lambda", self.lambda_),
                           ("notes", self.notes)):
            if value is not None:
                out[key] = value
        return out

    def expression(self):
        """The λ-expression, preferring an explicit lambda over the question."""
        if self.lambda_:
            return parse_lambda(self.lambda_)
        return parse_question(self.question)


def load_dataset(path: str | Path) -> tuple[list[DatasetItem], list[str]]:
    """Read JSON lines; malformed items are skipped and reported, not fatal."""
    items, errors = [], []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            items.append(DatasetItem.from_dict(json.loads(line)))
        except (json.JSONDecodeError, DatasetFormatError) as exc:
            msg = f"{path}:{n}: {exc}"
            logger.warning("skipping malformed dataset item: %s", msg)
            errors.append(msg)
    return items, errors


# -------------------------------------------------------------------- report


@dataclass
class ItemResult:
    id: str
    predicted: list[str]
    gold: list[str]
    score: ItemScore
    verdict: str
    reason: Optional[str]
    extractions: int
    trace: Optional[AnswerTrace] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "predicted": self.predicted,
            "gold": self.gold,
            "precision": self.score.precision,
            "recall": self.score.recall,
            "f1": self.score.f1,
            "matched": [list(p) for p in self.score.matched],
            "verdict": self.verdict,
            "reason": self.reason,
            "extractions": self.extractions,
        }


@dataclass
class EvalReport:
    mode: Mode
    match_mode: MatchMode
    items: list[ItemResult]
    skipped: list[str] = field(default_factory=list)

    def _mean(self, attr: str) -> float:
        if not self.items:
            return 0.0
        return sum(getattr(i.score, attr) for i in self.items) / len(self.items)

    @property
    def macro_precision(self) -> float:
        return self._mean("precision")

    @property
    def macro_recall(self) -> float:
        return self._mean("recall")

    @property
    def macro_f1(self) -> float:
        return self._mean("f1")

    @property
    def answered(self) -> int:
        return sum(1 for i in self.items if i.verdict != Verdict.UNANSWERED.value)

    @property
    def unanswered(self) -> int:
        return len(self.items) - self.answered

    @property
    def extraction_invocations(self) -> int:
        return sum(i.extractions for i in self.items)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "match": self.match_mode.value,
            "aggregate": {
                "macro_precision": self.macro_precision,
                "macro_recall": self.macro_recall,
                "macro_f1": self.macro_f1,
            },
            "counts": {
                "items": len(self.items),
                "answered": self.answered,
                "unanswered": self.unanswered,
                "extraction_invocations": self.extraction_invocations,
                "skipped": len(self.skipped),
            },
            "items": [i.to_dict() for i in self.items],
            "skipped": self.skipped,
        }

    def table(self) -> str:
        head = f"{'mode':<10} {'items':>5} {'answered':>8} {'P':>6} {'R':>6} {'F1':>6} {'extr':>5}"
        row = (f"{self.mode.value:<10} {len(self.items):>5} {self.answered:>8} "
               f"{self.macro_precision:>6.3f} {self.macro_recall:>6.3f} {self.macro_f1:>6.3f} "
               f"{self.extraction_invocations:>5}")
        return head + "\n" + row


def run_eval(items: Sequence[DatasetItem], kb: KbBackend, corpus: Optional[Corpus],
             mode: Mode = Mode.KB_TEXT, config: OrchestratorConfig = OrchestratorConfig(),
             match_mode: MatchMode = MatchMode.EXACT, jobs: int = 1,
             keep_traces: bool = False) -> EvalReport:
    config = OrchestratorConfig(mode, config.today, config.extraction_budget, config.jobs,
                                config.extraction)
    orch = Orchestrator(kb, corpus, config)
    skipped: list[str] = []

    def run_one(item: DatasetItem) -> Optional[ItemResult]:
        try:
            expr = item.expression()
        except (LambdaError, UnsupportedQuestion) as exc:
            skipped.append(f"{item.id}: {exc}")
            logger.warning("skipping item %s: %s", item.id, exc)
            return None
        answers, trace = orch.answer(expr)
        predicted = answers.labels()
        return ItemResult(item.id, predicted, list(item.gold_answers),
                          score_item(predicted, item.gold_answers, match_mode),
                          trace.verdict.value, trace.reason, trace.extraction_count,
                          trace if keep_traces else None)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, items))
    else:
        results = [run_one(i) for i in items]
    return EvalReport(mode, match_mode, [r for r in results if r is not None], sorted(skipped))


# ------------------------------------------------------------------ ablation


@dataclass(frozen=True)
class QualifierDeletion:
    kinds: tuple[str, ...]
    entity: Optional[str] = None
    fact: Optional[str] = None


@dataclass(frozen=True)
class LabelCorruption:
    entity: str
    to: str


@dataclass(frozen=True)
class AblationPlan:
    delete_qualifiers: tuple[QualifierDeletion, ...] = ()
    corrupt_labels: tuple[LabelCorruption, ...] = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "AblationPlan":
        try:
            deletions = tuple(
                QualifierDeletion(tuple(d.get("kinds", TIME_KINDS)),
                                  d.get("entity"), d.get("fact"))
                for d in data.get("delete_qualifiers", ())
            )
            corruptions = tuple(LabelCorruption(c["entity"], c["to"])
                                for c in data.get("corrupt_labels", ()))
        except (KeyError, TypeError, AttributeError) as exc:
            raise AblationError(f"malformed ablation plan: {exc}") from exc
        for d in deletions:
            if (d.entity is None) == (d.fact is None):
                raise AblationError("each deletion names exactly one of entity or fact")
        return cls(deletions, corruptions)

    @classmethod
    def load(cls, path: str | Path) -> "AblationPlan":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def ablate(store: KbStore, plan: AblationPlan) -> KbStore:
    """A new store with the planned temporal qualifiers removed and labels corrupted.

    Deleting kinds for an entity removes both its own event-time facts and
    those qualifiers on every statement it is the subject of.
    """
    kind_prop = {k: getattr(store.time_props, k) for k in TIME_KINDS}
    facts = list(store.facts)
    for d in plan.delete_qualifiers:
        bad = set(d.kinds) - set(kind_prop)
        if bad:
            raise AblationError(f"unknown qualifier kinds {sorted(bad)}")
        if d.fact is not None:
            if not store.has_fact(d.fact):
                raise UnknownFactId(d.fact)
            facts = [_drop(f, d.kinds) if f.fact_id == d.fact else f for f in facts]
            continue
        if d.entity not in store.entities:
            raise UnknownFactId(f"unknown entity {d.entity}")
        props = {kind_prop[k] for k in d.kinds}
        facts = [
            _drop(f, d.kinds) if f.subject == d.entity else f
            for f in facts
            if not (f.subject == d.entity and f.predicate in props)
        ]
    entities = dict(store.entities)
    for c in plan.corrupt_labels:
        if c.entity not in entities:
            raise UnknownFactId(f"unknown entity {c.entity}")
        entities[c.entity] = KbEntity(c.entity, c.to, ())
    return store.replace(entities.values(), facts)


def _drop(fact: KbFact, kinds: Sequence[str]) -> KbFact:
    return replace(fact, **{k: None for k in kinds})
