"""SPARQL generation over Wikidata-style reified statements, and conversion of
SPARQL JSON results back into answer sets.

Generated queries carry ``#tqa:`` pragma comments that tell the result reader
which column is the answer and which post-selection (before/after extremal
choice) to apply; the comments are ignored by any SPARQL engine.

Date comparisons in generated filters follow one rule: ``x <= y`` holds when
the earliest day covered by ``x`` is on or before the latest day covered by
``y``. For day-precision values this is plain ``<=``. ``tqa:earliest`` and
``tqa:latest`` turn a coarse date into its first or last day.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from ..answers import Answer, AnswerSet
from ..lambda_expr import Variable
from ..temporal import CalendarPoint, TemporalRelation, TimedCandidate, TimeInterval, select
from .evaluator import answer_interval_variable
from .linking import ConnectivePlan, Const, IntervalPlan, LinkedLambda, RelationPlan
from .store import TimeProperties


class SparqlError(Exception):
    pass


class UnresolvedMentions(SparqlError):
    pass


class UnsupportedQuery(SparqlError):
    pass


class MalformedResponse(SparqlError):
    pass


PREFIXES = {
    "wd": "http://www.wikidata.org/entity/",
    "wds": "http://www.wikidata.org/entity/statement/",
    "wdt": "http://www.wikidata.org/prop/direct/",
    "p": "http://www.wikidata.org/prop/",
    "ps": "http://www.wikidata.org/prop/statement/",
    "pq": "http://www.wikidata.org/prop/qualifier/",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "skos": "http://www.w3.org/2004/02/skos/core#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "tqa": "urn:tqa:fn:",
}

_XSD_BY_GRANULARITY = {"year": "xsd:gYear", "month": "xsd:gYearMonth", "day": "xsd:date"}


def date_literal(point: CalendarPoint) -> str:
    return f'"{point}"^^{_XSD_BY_GRANULARITY[point.granularity.value]}'


def _day_literal(day: tuple[int, int, int]) -> str:
    return date_literal(CalendarPoint(*day))


@dataclass
class _Builder:
    props: TimeProperties
    lines: list[str]
    fresh: int = 0

    def var(self, prefix: str = "_v") -> str:
        self.fresh += 1
        return f"?{prefix}{self.fresh}"


def _slot(slot, b: _Builder) -> str:
    if slot is None:
        return b.var()
    if isinstance(slot, Const):
        return f"wd:{slot.id}"
    return f"?{slot.name}"


def generate_sparql(linked: LinkedLambda, today: Optional[CalendarPoint] = None,
                    time_props: TimeProperties = TimeProperties()) -> str:
    if linked.unresolved:
        raise UnresolvedMentions("unresolved mentions: " + ", ".join(linked.unresolved))
    expr = linked.source
    plans = linked.plans
    conns = [p for p in plans if isinstance(p, ConnectivePlan)]
    if any(isinstance(c.left, Variable) and isinstance(c.right, Variable)
           and c.relation is not TemporalRelation.NOW for c in conns):
        raise UnsupportedQuery("variable connective: resolve the aux interval and reform first")

    statement_vars = {p.event.name for p in plans
                      if isinstance(p, RelationPlan) and isinstance(p.event, Variable)}
    entity_vars = {s.name for p in plans if isinstance(p, RelationPlan)
                   for s in (p.subject, p.object) if isinstance(s, Variable)}
    interval_vars = [p.var.name for p in plans if isinstance(p, IntervalPlan)]
    if len(set(interval_vars)) != len(interval_vars):
        raise UnsupportedQuery("an interval variable is bound by more than one interval predicate")

    b = _Builder(time_props, [])
    where = b.lines
    for p in plans:
        if not isinstance(p, RelationPlan):
            continue
        stmt = _slot(p.event, b)
        where.append(f"{_slot(p.subject, b)} p:{p.relation} {stmt} .")
        if p.object is not None:
            where.append(f"{stmt} ps:{p.relation} {_slot(p.object, b)} .")
    for p in plans:
        if not isinstance(p, IntervalPlan):
            continue
        v = p.var.name
        if isinstance(p.event, Const):
            holder, ns = f"wd:{p.event.id}", "wdt"
        elif p.event.name in statement_vars:
            holder, ns = f"?{p.event.name}", "pq"
        elif p.event.name in entity_vars:
            holder, ns = f"?{p.event.name}", "wdt"
        else:
            raise UnsupportedQuery(f"cannot tell whether ?{p.event.name} is a statement or an entity")
        for suffix, prop in (("s", b.props.start_time), ("e", b.props.end_time),
                             ("p", b.props.point_in_time)):
            where.append(f"OPTIONAL {{ {holder} {ns}:{prop} ?{v}_{suffix} . }}")
        where.append(f"BIND(COALESCE(?{v}_p, ?{v}_s) AS ?{v}_start)")
        where.append(f"BIND(COALESCE(?{v}_p, ?{v}_e) AS ?{v}_end)")
        where.append(f"FILTER(BOUND(?{v}_start) || BOUND(?{v}_end))")

    unknown = expr.unknown.name
    pragmas = []
    if unknown in interval_vars:
        select_vars = [f"?{unknown}_start", f"?{unknown}_end"]
        pragmas.append(f"#tqa: unknown={unknown} kind=interval")
        attach = None
    else:
        select_vars = [f"?{unknown}", f"?{unknown}Label"]
        where.append(f"OPTIONAL {{ ?{unknown} rdfs:label ?{unknown}Label . }}")
        attach = answer_interval_variable(expr)
        if attach:
            select_vars += [f"?{attach}_start", f"?{attach}_end"]
        pragmas.append(f"#tqa: unknown={unknown} kind=entity"
                       + (f" attach={attach}" if attach else ""))

    for c in conns:
        target = attach or (unknown if unknown in interval_vars else None)
        if target is None:
            raise UnsupportedQuery("connective without an interval to constrain")
        aux = c.right if isinstance(c.right, TimeInterval) else c.left
        rel = c.relation
        if rel is TemporalRelation.NOW:
            if today is None:
                raise UnsupportedQuery("'now' needs an explicit today")
            aux, rel = TimeInterval(today, today), TemporalRelation.OVERLAP
        if not isinstance(aux, TimeInterval):
            raise UnsupportedQuery(f"{c.relation.value} has no interval literal")
        where.append(_connective_filter(rel, aux, target))
        if rel in (TemporalRelation.BEFORE, TemporalRelation.AFTER):
            pragmas.append(f"#tqa: select={rel.value} aux={_compact(aux)}")

    head = "\n".join(f"PREFIX {k}: <{v}>" for k, v in PREFIXES.items())
    body = "\n".join("  " + line for line in where)
    return (f"{head}\n" + "\n".join(pragmas) +
            f"\nSELECT DISTINCT {' '.join(select_vars)} WHERE {{\n{body}\n}}\n")


def _compact(iv: TimeInterval) -> str:
    return f"{iv.start or ''}..{iv.end or ''}"


def _connective_filter(rel: TemporalRelation, aux: TimeInterval, v: str) -> str:
    if rel is TemporalRelation.OVERLAP:
        parts = []
        if aux.end is not None:
            parts.append(f"(!BOUND(?{v}_start) || ?{v}_start <= {date_literal(aux.end)})")
        if aux.start is not None:
            parts.append(f"(!BOUND(?{v}_end) || {date_literal(aux.start)} <= ?{v}_end)")
        return f"FILTER({' && '.join(parts) or 'true'})"
    if rel is TemporalRelation.BEFORE:
        if aux.start is None:
            raise UnsupportedQuery("before needs an aux start")
        return f"FILTER(tqa:latest(?{v}_end) <= {_day_literal(aux.start.earliest())})"
    if aux.end is None:
        raise UnsupportedQuery("after needs an aux end")
    return f"FILTER(tqa:earliest(?{v}_start) >= {_day_literal(aux.end.latest())})"


# ------------------------------------------------------------------ result reading

_PRAGMA_RE = re.compile(r"^#tqa:(.*)$", re.MULTILINE)
_SELECT_RE = re.compile(r"SELECT\s+(?:DISTINCT\s+)?((?:\?\w+\s*)+)WHERE", re.IGNORECASE)


def _pragmas(query: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in _PRAGMA_RE.findall(query):
        for item in line.split():
            if "=" in item:
                k, v = item.split("=", 1)
                out[k] = v
    return out


def parse_date_value(value: str) -> CalendarPoint:
    """Read a date literal; dateTime values keep their day."""
    text = value.strip()
    if "T" in text:
        text = text.split("T", 1)[0]
    if text.startswith("+"):
        text = text[1:]
    return CalendarPoint.parse(text)


def _entity_id(uri: str) -> str:
    for pfx in ("wd", "wds"):
        base = PREFIXES[pfx]
        if uri.startswith(base) and "/" not in uri[len(base):]:
            return uri[len(base):]
    return uri


def answerset_from_results(query: str, results: Mapping) -> AnswerSet:
    """Convert SPARQL JSON results of a query (ideally one we generated)."""
    try:
        rows = results["results"]["bindings"]
        head_vars = list(results.get("head", {}).get("vars", []))
    except (KeyError, TypeError) as exc:
        raise MalformedResponse(f"not a SPARQL JSON results document: {exc}") from exc
    prag = _pragmas(query)
    if "unknown" in prag:
        unknown, kind, attach = prag["unknown"], prag.get("kind", "entity"), prag.get("attach")
    else:
        m = _SELECT_RE.search(query)
        names = m.group(1).split() if m else ["?" + v for v in head_vars]
        if not names:
            raise MalformedResponse("cannot determine the answer column")
        unknown, kind, attach = names[0][1:], "entity", None

    def interval(row, var) -> Optional[TimeInterval]:
        s, e = row.get(f"{var}_start"), row.get(f"{var}_end")
        if s is None and e is None:
            return None
        try:
            return TimeInterval(parse_date_value(s["value"]) if s else None,
                                parse_date_value(e["value"]) if e else None)
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedResponse(f"bad date in results: {exc}") from exc

    answers: list[Answer] = []
    try:
        for row in rows:
            if kind == "interval":
                iv = interval(row, unknown)
                if iv is not None:
                    answers.append(Answer(interval=iv))
                continue
            cell = row.get(unknown)
            if cell is None:
                continue
            iv = interval(row, attach) if attach else None
            label_cell = row.get(f"{unknown}Label")
            if cell.get("type") == "uri":
                answers.append(Answer(entity_id=_entity_id(cell["value"]),
                                      label=label_cell["value"] if label_cell else None,
                                      interval=iv))
            else:
                answers.append(Answer(label=cell["value"], interval=iv))
    except (KeyError, TypeError, AttributeError) as exc:
        raise MalformedResponse(f"malformed binding row: {exc}") from exc

    if "select" in prag:
        rel = TemporalRelation.from_name(prag["select"])
        aux = TimeInterval.parse(prag["aux"])
        timed = [TimedCandidate(str(i), a.text(), a.interval)
                 for i, a in enumerate(answers) if a.interval is not None]
        answers = [answers[int(c.entity_id)] for c in select(timed, aux, rel)]
    return AnswerSet.of(answers)
