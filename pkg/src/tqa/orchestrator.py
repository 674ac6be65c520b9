"""Answer a λ-expression from the KB, falling back to targeted text extraction.

The flow is a small sequential state machine:

1. answer the full expression from the KB;
2. on failure decompose it; if the aux part is missing from the KB, extract
   its interval from text, reform the expression and ask the KB again;
3. otherwise enumerate candidates from the stripped main part, find each
   candidate's interval (KB first, then text) and let the temporal reasoner
   pick the survivors.

Every step lands in an :class:`AnswerTrace`.
"""

from __future__ import annotations

import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Protocol

from .answers import Answer, AnswerSet, AnswerSource, FailureTag
from .extraction import Corpus, ExtractionConfig, ExtractionRecord, run_extraction
from .extraction.corpus import CorpusError
from .extraction.extract import NoDateFound
from .extraction.services import ServiceError
from .kb.linking import LinkedLambda
from .kb.sparql import SparqlError, generate_sparql
from .kb.store import KbError
from .lambda_expr import (
    LambdaError,
    LambdaExpr,
    StringLiteral,
    decompose,
    instantiate_candidate,
    print_lambda,
    reform_lambda,
    strip_temporal,
)
from .querygen import QuerySource, UnrenderableLambda
from .temporal import (
    CalendarPoint,
    TemporalError,
    TemporalRelation,
    TimedCandidate,
    TimeInterval,
    compose_aux_intervals,
    select,
)

logger = logging.getLogger(__name__)

DEFAULT_EXTRACTION_BUDGET = 25
TRACE_SCHEMA_VERSION = 1


class KbBackend(Protocol):
    def link(self, expr: LambdaExpr) -> LinkedLambda: ...

    def answer(self, linked: LinkedLambda, today: Optional[CalendarPoint] = None) -> AnswerSet: ...


class Mode(enum.Enum):
    ONLY_KB = "only-kb"
    KB_TEXT = "kb-text"


class Verdict(enum.Enum):
    ANSWERED_FROM_KB = "AnsweredFromKB"
    ANSWERED_WITH_TEXT = "AnsweredWithText"
    UNANSWERED = "Unanswered"


@dataclass(frozen=True)
class OrchestratorConfig:
    mode: Mode = Mode.KB_TEXT
    today: Optional[CalendarPoint] = None
    extraction_budget: int = DEFAULT_EXTRACTION_BUDGET
    jobs: int = 1
    extraction: ExtractionConfig = ExtractionConfig()


@dataclass
class TraceStep:
    stage: str
    input: str
    outcome: str
    failure: Optional[str] = None
    queries: list[str] = field(default_factory=list)
    extraction: Optional[ExtractionRecord] = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        ex = self.extraction.to_dict() if self.extraction else None
        return {
            "stage": self.stage,
            "input": self.input,
            "outcome": self.outcome,
            "failure": self.failure,
            "queries": list(self.queries),
            "passages": ex["passages"] if ex else [],
            "extracted": ex["fact"] if ex else None,
            "extraction": ex,
            "detail": self.detail,
        }


@dataclass
class AnswerTrace:
    expr: str
    mode: Mode
    steps: list[TraceStep] = field(default_factory=list)
    verdict: Verdict = Verdict.UNANSWERED
    reason: Optional[str] = None
    warnings: list[str] = field(default_factory=list)

    @property
    def extraction_count(self) -> int:
        return sum(1 for s in self.steps if s.extraction is not None)

    def add(self, step: TraceStep) -> TraceStep:
        self.steps.append(step)
        return step

    def to_dict(self) -> dict:
        return {
            "schema_version": TRACE_SCHEMA_VERSION,
            "expr": self.expr,
            "mode": self.mode.value,
            "steps": [s.to_dict() for s in self.steps],
            "verdict": {"kind": self.verdict.value, "reason": self.reason},
            "extraction_count": self.extraction_count,
            "warnings": list(self.warnings),
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)


class _Unanswered(Exception):
    def __init__(self, reason: str, tag: FailureTag = FailureTag.MISSING_FACTS):
        super().__init__(reason)
        self.reason = reason
        self.tag = tag


class Orchestrator:
    def __init__(self, kb: KbBackend, corpus: Optional[Corpus],
                 config: OrchestratorConfig = OrchestratorConfig()):
        self.kb = kb
        self.corpus = corpus
        self.config = config

    # ----------------------------------------------------------------- KB calls

    def _kb(self, trace: AnswerTrace, stage: str, expr: LambdaExpr) -> tuple[AnswerSet, LinkedLambda]:
        queries = [print_lambda(expr)]
        try:
            linked = self.kb.link(expr)
            if linked.complete:
                try:
                    queries.append(generate_sparql(linked, self.config.today))
                except SparqlError:
                    pass
            result = self.kb.answer(linked, self.config.today)
        except KbError as exc:
            trace.add(TraceStep(stage, print_lambda(expr), "error", "StoreUnavailable", queries))
            raise _Unanswered(f"StoreUnavailable: {exc}") from exc
        tag = result.failure_tag.value if result.failure_tag else None
        outcome = f"{len(result)} answer(s)" if result else "empty"
        detail = {"answers": [a.to_dict() for a in result.answers]}
        if linked.unresolved:
            detail["unresolved"] = list(linked.unresolved)
        trace.add(TraceStep(stage, print_lambda(expr), outcome, tag, queries, detail=detail))
        return result, linked

    # --------------------------------------------------------------- extraction

    def _extract(self, trace: AnswerTrace, stage: str, expr: LambdaExpr, labels, entities,
                 source: QuerySource) -> Optional[TimeInterval]:
        step = self._run_extraction(stage, expr, labels, entities, source)
        trace.add(step)
        return step.extraction.fact.interval if step.extraction.fact else None

    def _run_extraction(self, stage: str, expr: LambdaExpr, labels, entities,
                        source: QuerySource) -> TraceStep:
        record = ExtractionRecord(print_lambda(expr))
        step = TraceStep(stage, print_lambda(expr), "pending", extraction=record)
        try:
            fact = run_extraction(expr, self.corpus, labels=labels, question_entities=entities,
                                  source=source, config=self.config.extraction, record=record)
        except (NoDateFound, UnrenderableLambda, CorpusError, ServiceError) as exc:
            record.error = f"{type(exc).__name__}: {exc}"
            step.outcome = "failed"
            step.failure = type(exc).__name__
        else:
            step.outcome = f"extracted {fact.interval}"
        if record.query is not None:
            step.queries.append(record.query.text)
        return step

    # ---------------------------------------------------------------- main flow

    def answer(self, expr: LambdaExpr) -> tuple[AnswerSet, AnswerTrace]:
        trace = AnswerTrace(print_lambda(expr), self.config.mode)
        try:
            result = self._answer(expr, trace)
        except _Unanswered as exc:
            trace.verdict = Verdict.UNANSWERED
            trace.reason = exc.reason
            return AnswerSet.failed(exc.tag, exc.reason), trace
        return result, trace

    def _answer(self, expr: LambdaExpr, trace: AnswerTrace) -> AnswerSet:
        # (1) full expression against the KB
        full, linked = self._kb(trace, "kb_full", expr)
        if full:
            trace.verdict = Verdict.ANSWERED_FROM_KB
            return full
        if self.config.mode is Mode.ONLY_KB:
            raise _Unanswered(full.failure_tag.value, full.failure_tag)
        if self.corpus is None:
            raise _Unanswered("NoCorpus", full.failure_tag)
        budget = [self.config.extraction_budget]
        entities = expr.literals()

        try:
            d = decompose(expr)
        except LambdaError as exc:
            trace.add(TraceStep("decompose", print_lambda(expr), "error", type(exc).__name__))
            raise _Unanswered(f"{type(exc).__name__}: {exc}", full.failure_tag) from exc
        trace.add(TraceStep("decompose", print_lambda(expr), "ok", detail={
            "main": print_lambda(d.main),
            "aux": print_lambda(d.aux) if d.aux else None,
            "connective": d.connective.value if d.connective else None,
        }))

        if d.connective is None:
            return self._answer_direct(expr, trace, linked, entities, budget, full.failure_tag)

        # (2) aux interval: KB first, then text
        aux_interval = self._aux_interval(d, trace, entities, budget)
        if d.aux is not None:
            reformed = reform_lambda(expr, aux_interval)
            again, _ = self._kb(trace, "kb_reformed", reformed)
            if again:
                trace.verdict = Verdict.ANSWERED_WITH_TEXT
                return AnswerSet(again.answers, None, AnswerSource.KB_PLUS_TEXT)
            logger.debug("reformed query failed (%s); taking the main path", again.failure_tag)

        # (3) main path
        return self._main_path(d, aux_interval, trace, entities, budget)

    def _answer_direct(self, expr, trace, linked, entities, budget, tag) -> AnswerSet:
        """No connective: only an interval-valued question can be read from text."""
        if expr.unknown.name not in {p.args[0].name for p in expr.interval_predicates}:
            raise _Unanswered(f"{tag.value}: no temporal constraint to recover", tag)
        if not self._spend(budget, trace):
            raise _Unanswered("ExtractionBudgetExhausted", tag)
        interval = self._extract(trace, "extract_direct", expr, linked.labels(), entities,
                                 QuerySource.AUX)
        if interval is None:
            raise _Unanswered("NoDateFound", tag)
        trace.verdict = Verdict.ANSWERED_WITH_TEXT
        return AnswerSet((Answer(interval=interval),), None, AnswerSource.KB_PLUS_TEXT)

    def _spend(self, budget: list[int], trace: AnswerTrace) -> bool:
        if budget[0] <= 0:
            return False
        budget[0] -= 1
        return True

    def _aux_interval(self, d, trace: AnswerTrace, entities, budget) -> TimeInterval:
        if d.aux is None:
            # now(hi, hi) style: the aux side is today
            if self.config.today is None:
                raise _Unanswered("Now needs an explicit today")
            return TimeInterval(self.config.today, self.config.today)
        aux, aux_linked = self._kb(trace, "kb_aux", d.aux)
        if aux:
            intervals = aux.intervals()
        else:
            trace.add(TraceStep("classify", print_lambda(d.aux), "AuxFailure",
                                aux.failure_tag.value))
            intervals = []
            labels = aux_linked.labels()
            for part in _aux_parts(d.aux):
                if not self._spend(budget, trace):
                    trace.warnings.append("extraction budget exhausted during aux recovery")
                    raise _Unanswered("AuxFailure: ExtractionBudgetExhausted")
                iv = self._extract(trace, "extract_aux", part, labels, entities, QuerySource.AUX)
                if iv is None:
                    raise _Unanswered(f"AuxFailure: no interval for {print_lambda(part)}",
                                      aux.failure_tag)
                intervals.append(iv)
        try:
            return compose_aux_intervals(intervals)
        except TemporalError as exc:
            raise _Unanswered(f"AuxFailure: {exc}") from exc

    def _main_path(self, d, aux_interval: TimeInterval, trace: AnswerTrace, entities,
                   budget) -> AnswerSet:
        trace.add(TraceStep("classify", print_lambda(d.main), "MainFailure"))
        try:
            stripped = strip_temporal(d.main)
        except LambdaError as exc:
            raise _Unanswered("NoCandidates") from exc
        cands, cand_linked = self._kb(trace, "kb_candidates", stripped)
        if not cands:
            raise _Unanswered("NoCandidates", cands.failure_tag)
        named = [a for a in cands.answers if a.label is not None]
        labels = cand_linked.labels()

        timed: list[TimedCandidate] = []
        need_text: list[tuple[Answer, LambdaExpr]] = []
        for cand in named:
            try:
                inst = instantiate_candidate(d.main, cand.label)
            except LambdaError as exc:
                raise _Unanswered(f"NoIntervalVariable: {exc}") from exc
            found, _ = self._kb(trace, "kb_candidate_interval", inst)
            if found:
                timed.extend(TimedCandidate(cand.entity_id or cand.label, cand.label, iv, "KB")
                             for iv in found.intervals())
            else:
                need_text.append((cand, inst))

        if need_text:
            allowed = max(budget[0], 0)
            if len(need_text) > allowed:
                skipped = [c.label for c, _ in need_text[allowed:]]
                trace.warnings.append(
                    f"extraction budget exhausted; skipped {len(skipped)} candidate(s): "
                    + ", ".join(skipped))
                need_text = need_text[:allowed]
            budget[0] -= len(need_text)
            cand_labels = {**labels, **{c.label: c.label for c, _ in need_text}}
            steps = self._fan_out(need_text, cand_labels, entities)
            dropped = []
            for (cand, _), step in zip(need_text, steps):
                trace.add(step)
                fact = step.extraction.fact
                if fact is None:
                    dropped.append(cand.label)
                else:
                    timed.append(TimedCandidate(cand.entity_id or cand.label, cand.label,
                                                fact.interval, "Text"))
            if dropped:
                trace.warnings.append("no interval found for: " + ", ".join(dropped))

        if not timed:
            raise _Unanswered("MainFailure: no candidate interval in KB or text")
        try:
            chosen = select(timed, aux_interval, d.connective, self.config.today)
        except TemporalError as exc:
            raise _Unanswered(f"{type(exc).__name__}: {exc}") from exc
        trace.add(TraceStep("reason", f"{len(timed)} timed candidate(s)",
                            f"{len(chosen)} selected", detail={
                                "relation": d.connective.value,
                                "aux_interval": str(aux_interval),
                                "candidates": [
                                    {"id": c.entity_id, "label": c.label,
                                     "interval": str(c.interval), "provenance": c.provenance}
                                    for c in timed],
                                "selected": [c.label for c in chosen],
                            }))
        if not chosen:
            raise _Unanswered("EmptySelection")
        trace.verdict = Verdict.ANSWERED_WITH_TEXT
        answers = [Answer(c.entity_id, c.label, c.interval) for c in chosen]
        return AnswerSet(tuple(answers), None, AnswerSource.KB_PLUS_TEXT)

    def _fan_out(self, items, labels, entities) -> list[TraceStep]:
        def run(item):
            _, inst = item
            return self._run_extraction("extract_candidate", inst, labels, entities,
                                        QuerySource.MAIN_CANDIDATE)

        if self.config.jobs <= 1 or len(items) <= 1:
            return [run(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
            return list(pool.map(run, items))


def _aux_parts(aux: LambdaExpr) -> list[LambdaExpr]:
    """Split an aux part made only of literal-event intervals into one query each."""
    preds = aux.predicates
    if len(preds) > 1 and all(p.is_interval and isinstance(p.args[1], StringLiteral)
                              for p in preds):
        return [LambdaExpr(p.args[0], (p,)) for p in preds]
    return [aux]


def answer(expr: LambdaExpr, kb: KbBackend, corpus: Optional[Corpus],
           config: OrchestratorConfig = OrchestratorConfig()) -> tuple[AnswerSet, AnswerTrace]:
    return Orchestrator(kb, corpus, config).answer(expr)
