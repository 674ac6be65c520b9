"""Conjunctive pattern matching of linked lambda expressions over a KbStore."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

from ..answers import Answer, AnswerSet, FailureTag
from ..lambda_expr import LambdaError, LambdaExpr, Variable, decompose, reform_lambda
from ..temporal import (
    CalendarPoint,
    TemporalError,
    TemporalRelation,
    TimedCandidate,
    TimeInterval,
    compose_aux_intervals,
    select,
)
from .linking import (
    ConnectivePlan,
    Const,
    IntervalPlan,
    LinkedLambda,
    Linker,
    RelationPlan,
)
from .store import KbStore


@dataclass(frozen=True)
class FactRef:
    """Value of an event variable: a reified statement."""

    fact_id: str


Value = Union[str, FactRef, TimeInterval]
Assignment = dict[str, Value]


class Evaluator:
    def __init__(self, store: KbStore, linker: Optional[Linker] = None):
        self.store = store
        self.linker = linker or Linker(store)

    # -------------------------------------------------------------- public API

    def answer(self, linked: LinkedLambda, today: Optional[CalendarPoint] = None) -> AnswerSet:
        if linked.unresolved:
            return AnswerSet.failed(
                FailureTag.LINKING_FAILURE, "unresolved: " + ", ".join(linked.unresolved))
        expr = linked.source
        conns = [p for p in linked.plans if isinstance(p, ConnectivePlan)]
        if any(isinstance(c.left, Variable) and isinstance(c.right, Variable) for c in conns):
            return self._answer_with_aux(expr, today)
        return self._answer_flat(linked, today)

    def link(self, expr: LambdaExpr) -> LinkedLambda:
        return self.linker.link(expr)

    def answer_expr(self, expr: LambdaExpr, today: Optional[CalendarPoint] = None) -> AnswerSet:
        return self.answer(self.linker.link(expr), today)

    # --------------------------------------------------------------- internals

    def _answer_with_aux(self, expr: LambdaExpr, today: Optional[CalendarPoint]) -> AnswerSet:
        """Variable connective: resolve the aux interval first, then the reformed expression."""
        d = decompose(expr)
        if d.aux is None:
            # now(x, x): only the main part and today matter.
            main = LambdaExpr(expr.unknown, d.main.predicates + (d.connective_predicate,))
            return self._answer_flat(self.linker.link(main), today)
        aux = self.answer(self.linker.link(d.aux), today)
        if not aux:
            return aux
        try:
            interval = compose_aux_intervals(aux.intervals())
        except TemporalError as exc:
            return AnswerSet.failed(FailureTag.MISSING_FACTS, f"aux intervals: {exc}")
        return self.answer(self.linker.link(reform_lambda(expr, interval)), today)

    def _answer_flat(self, linked: LinkedLambda, today: Optional[CalendarPoint]) -> AnswerSet:
        expr = linked.source
        body = [p for p in linked.plans if not isinstance(p, ConnectivePlan)]
        conns = [p for p in linked.plans if isinstance(p, ConnectivePlan)]
        # relations first so event variables are bound before interval lookups
        body.sort(key=lambda p: 0 if isinstance(p, RelationPlan) else 1)
        unknown = expr.unknown.name
        attach = answer_interval_variable(expr)
        rows: set[tuple] = set()
        for a in self._solve(body, 0, {}):
            if unknown not in a:
                continue
            rows.add((a[unknown], a.get(attach) if attach else None))
        answers = [self._to_answer(v, iv) for v, iv in rows]
        for conn in conns:
            answers = self._apply_connective(conn, answers, attach, today)
        return AnswerSet.of(answers)

    def _apply_connective(self, conn: ConnectivePlan, answers: list[Answer],
                          attach: Optional[str], today) -> list[Answer]:
        aux = conn.right if isinstance(conn.right, TimeInterval) else conn.left
        if isinstance(aux, Variable):
            aux = None
        timed = []
        for i, ans in enumerate(answers):
            iv = ans.interval
            if iv is None:
                continue
            timed.append(TimedCandidate(str(i), ans.text(), iv))
        chosen = select(timed, aux, conn.relation, today)
        return [answers[int(c.entity_id)] for c in chosen]

    def _to_answer(self, value: Value, interval: Optional[TimeInterval]) -> Answer:
        if isinstance(value, TimeInterval):
            return Answer(interval=value)
        if isinstance(value, FactRef):
            return Answer(entity_id=value.fact_id, interval=interval)
        label = self.store.label(value)
        if label is not None:
            return Answer(entity_id=value, label=label, interval=interval)
        return Answer(label=value, interval=interval)

    def _solve(self, plans: list, i: int, a: Assignment) -> Iterator[Assignment]:
        if i == len(plans):
            yield a
            return
        plan = plans[i]
        if plan is None:
            return
        if isinstance(plan, RelationPlan):
            for f in self.store.facts_with_predicate(plan.relation):
                b = dict(a)
                if (_unify(b, plan.event, FactRef(f.fact_id))
                        and _unify(b, plan.subject, f.subject)
                        and (plan.object is None or (f.object is not None
                                                     and _unify(b, plan.object, f.object)))):
                    yield from self._solve(plans, i + 1, b)
        else:
            for event, interval in self._interval_options(plan, a):
                b = dict(a)
                if _unify(b, plan.event, event) and _unify(b, plan.var, interval):
                    yield from self._solve(plans, i + 1, b)

    def _interval_options(self, plan: IntervalPlan, a: Assignment):
        ev = plan.event
        if isinstance(ev, Const):
            values = [ev.id]
        elif ev.name in a:
            values = [a[ev.name]]
        else:
            values = [FactRef(f.fact_id) for f in self.store.facts] + list(self.store.entities)
        for v in values:
            iv = self._interval_of(v)
            if iv is not None:
                yield v, iv

    def _interval_of(self, value: Value) -> Optional[TimeInterval]:
        if isinstance(value, FactRef):
            return self.store.fact(value.fact_id).interval()
        if isinstance(value, str):
            return self.store.entity_interval(value)
        return None


def _unify(a: Assignment, slot, value) -> bool:
    if slot is None:
        return True
    if isinstance(slot, Const):
        return slot.id == value
    name = slot.name
    if name in a:
        return a[name] == value
    a[name] = value
    return True


def answer_interval_variable(expr: LambdaExpr) -> Optional[str]:
    """The interval variable whose value accompanies each entity answer."""
    interval_vars = [p.args[0].name for p in expr.interval_predicates]
    if expr.unknown.name in interval_vars:
        return None
    for p in expr.connectives:
        for arg in p.args:
            if isinstance(arg, Variable) and arg.name in interval_vars:
                return arg.name
    return interval_vars[0] if interval_vars else None


def get_kb_answer(linked: LinkedLambda, store: KbStore,
                  today: Optional[CalendarPoint] = None) -> AnswerSet:
    return Evaluator(store).answer(linked, today)
