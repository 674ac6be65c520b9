"""Flat conjunctive lambda expressions: AST, parser, printer and the
decomposition/rewriting operations used by the answering pipeline.

Grammar::

    expr  := BINDER var '.' pred (CONJ pred)*
    pred  := name '(' term (',' term)* ')'
    term  := var | string | interval
    interval := '(' 'interval_start:' [point] ',' 'interval_end:' [point] ')'

``BINDER`` is ``lambda`` or ``λ``; ``CONJ`` is ``^``, ``∧`` or ``AND``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .temporal import CalendarPoint, TemporalError, TemporalRelation, TimeInterval

CONNECTIVES = frozenset(r.value for r in TemporalRelation)
INTERVAL = "interval"
_VAR_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*\Z")


class LambdaError(Exception):
    pass


class LambdaSyntaxError(LambdaError):
    def __init__(self, position: int, expected: str, text: str = ""):
        self.position = position
        self.expected = expected
        snippet = text[position:position + 20]
        super().__init__(f"at position {position}: expected {expected} (found {snippet!r})")


class MissingBinder(LambdaSyntaxError):
    def __init__(self, text: str = ""):
        LambdaError.__init__(self, "no lambda binder found")
        self.position, self.expected = 0, "lambda"


class DuplicateBinder(LambdaSyntaxError):
    def __init__(self, position: int, text: str = ""):
        LambdaError.__init__(self, f"second lambda binder at position {position}")
        self.position, self.expected = position, "predicate"


class MultipleConnectives(LambdaError):
    pass


class DisconnectedAux(LambdaError):
    pass


class EmptyResult(LambdaError):
    pass


class NoAuxPart(LambdaError):
    pass


class NoIntervalVariable(LambdaError):
    pass


# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self):
        if not _VAR_RE.match(self.name):
            raise LambdaError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True)
class StringLiteral:
    value: str


@dataclass(frozen=True)
class IntervalLiteral:
    value: TimeInterval


Term = Union[Variable, StringLiteral, IntervalLiteral]


@dataclass(frozen=True)
class Predicate:
    name: str
    args: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise LambdaError(f"predicate {self.name} has no arguments")
        if self.name == INTERVAL:
            if len(self.args) != 2 or not isinstance(self.args[0], Variable) \
                    or isinstance(self.args[1], IntervalLiteral):
                raise LambdaError("interval(var, event) takes a variable and an event term")
        elif self.is_connective:
            if len(self.args) != 2 or any(isinstance(a, StringLiteral) for a in self.args):
                raise LambdaError(f"{self.name} takes two variables or interval literals")

    @property
    def is_connective(self) -> bool:
        return self.name in CONNECTIVES

    @property
    def is_interval(self) -> bool:
        return self.name == INTERVAL

    def variables(self) -> set[str]:
        return {a.name for a in self.args if isinstance(a, Variable)}


@dataclass(frozen=True)
class LambdaExpr:
    unknown: Variable
    predicates: tuple[Predicate, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple(self.predicates))
        if not self.predicates:
            raise LambdaError("lambda expression needs at least one predicate")
        interval_vars = {p.args[0].name for p in self.predicates if p.is_interval}
        for p in self.predicates:
            if p.is_connective and not p.variables() <= interval_vars:
                missing = sorted(p.variables() - interval_vars)
                raise LambdaError(f"{p.name} uses {missing} which no interval predicate binds")

    def __str__(self) -> str:
        return print_lambda(self)

    def variables(self) -> set[str]:
        out: set[str] = set()
        for p in self.predicates:
            out |= p.variables()
        return out

    @property
    def connectives(self) -> list[Predicate]:
        return [p for p in self.predicates if p.is_connective]

    @property
    def interval_predicates(self) -> list[Predicate]:
        return [p for p in self.predicates if p.is_interval]

    def literals(self) -> list[str]:
        seen: list[str] = []
        for p in self.predicates:
            for a in p.args:
                if isinstance(a, StringLiteral) and a.value not in seen:
                    seen.append(a.value)
        return seen


@dataclass(frozen=True)
class Decomposition:
    main: LambdaExpr
    aux: Optional[LambdaExpr] = None
    connective: Optional[TemporalRelation] = None
    connective_predicate: Optional[Predicate] = field(default=None, compare=False)


# ------------------------------------------------------------------------ parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ilit>interval_(?:start|end)\s*:\s*(?:-?\d+(?:-\d{2}){0,2})?)
  | (?P<binder>λ|\blambda\b)
  | (?P<conj>\^|∧|\bAND\b)
  | (?P<punct>[().,])
  | (?P<name>[A-Za-z][A-Za-z0-9_\-]*)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise LambdaSyntaxError(pos, "token", text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str, value: Optional[str] = None, expected: Optional[str] = None):
        tok = self.tokens[self.i]
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise LambdaSyntaxError(tok[2], expected or value or kind, self.text)
        self.i += 1
        return tok

    def parse(self) -> LambdaExpr:
        binders = [t for t in self.tokens if t[0] == "binder"]
        if not binders:
            raise MissingBinder(self.text)
        if len(binders) > 1:
            raise DuplicateBinder(binders[1][2], self.text)
        self.take("binder", expected="lambda")
        var = self.variable()
        self.take("punct", ".", expected="'.'")
        preds = [self.predicate()]
        while self.peek()[0] == "conj":
            self.i += 1
            preds.append(self.predicate())
        self.take("eof", expected="end of input or conjunction")
        try:
            return LambdaExpr(var, tuple(preds))
        except LambdaError as exc:
            raise LambdaSyntaxError(0, str(exc), self.text) from None

    def variable(self) -> Variable:
        tok = self.peek()
        if tok[0] != "name" or not _VAR_RE.match(tok[1]):
            raise LambdaSyntaxError(tok[2], "variable", self.text)
        self.i += 1
        return Variable(tok[1])

    def predicate(self) -> Predicate:
        name = self.take("name", expected="predicate name")
        self.take("punct", "(", expected="'('")
        args = [self.term()]
        while self.peek()[1] == ",":
            self.i += 1
            args.append(self.term())
        self.take("punct", ")", expected="')'")
        try:
            return Predicate(name[1], tuple(args))
        except LambdaError as exc:
            raise LambdaSyntaxError(name[2], str(exc), self.text) from None

    def term(self) -> Term:
        kind, value, pos = self.peek()
        if kind == "string":
            self.i += 1
            return StringLiteral(_unescape(value[1:-1]))
        if kind == "name":
            return self.variable()
        if value == "(":
            return self.interval_literal()
        raise LambdaSyntaxError(pos, "variable, string or interval literal", self.text)

    def interval_literal(self) -> IntervalLiteral:
        self.take("punct", "(")
        start = self.bound("interval_start")
        self.take("punct", ",", expected="','")
        end = self.bound("interval_end")
        self.take("punct", ")", expected="')'")
        try:
            return IntervalLiteral(TimeInterval(start, end))
        except TemporalError as exc:
            raise LambdaSyntaxError(self.peek()[2], str(exc), self.text) from None

    def bound(self, key: str) -> Optional[CalendarPoint]:
        kind, value, pos = self.peek()
        if kind != "ilit" or not value.startswith(key):
            raise LambdaSyntaxError(pos, key, self.text)
        self.i += 1
        raw = value.split(":", 1)[1].strip()
        if not raw:
            return None
        try:
            return CalendarPoint.parse(raw)
        except TemporalError:
            raise LambdaSyntaxError(pos, "calendar point", self.text) from None


def _unescape(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s)


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def parse_lambda(text: str) -> LambdaExpr:
    return _Parser(text).parse()


# ----------------------------------------------------------------------- printer


def _print_term(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, StringLiteral):
        return f'"{_escape(t.value)}"'
    iv = t.value
    start = str(iv.start) if iv.start is not None else ""
    end = str(iv.end) if iv.end is not None else ""
    return f"(interval_start:{start}, interval_end:{end})"


def print_predicate(p: Predicate) -> str:
    return f"{p.name}({', '.join(_print_term(a) for a in p.args)})"


def print_lambda(expr: LambdaExpr) -> str:
    body = " ^ ".join(print_predicate(p) for p in expr.predicates)
    return f"lambda {expr.unknown.name} . {body}"


# ------------------------------------------------------------------- operations


def _connected(preds: list[Predicate], anchor: str) -> list[int]:
    """Indices of predicates reachable from ``anchor`` through shared variables."""
    reached_vars = {anchor}
    members: set[int] = set()
    changed = True
    while changed:
        changed = False
        for i, p in enumerate(preds):
            if i not in members and p.variables() & reached_vars:
                members.add(i)
                reached_vars |= p.variables()
                changed = True
    return sorted(members)


def decompose(expr: LambdaExpr) -> Decomposition:
    conns = expr.connectives
    if len(conns) > 1:
        raise MultipleConnectives(f"{len(conns)} connective predicates; at most one is supported")
    if not conns:
        return Decomposition(main=expr)
    conn = conns[0]
    rel = TemporalRelation.from_name(conn.name)
    body = [p for p in expr.predicates if not p.is_connective]
    main_idx = set(_connected(body, expr.unknown.name))
    main_preds = [p for i, p in enumerate(body) if i in main_idx]
    aux_preds = [p for i, p in enumerate(body) if i not in main_idx]
    if not main_preds:
        raise EmptyResult("no predicate mentions the unknown variable")
    main = LambdaExpr(expr.unknown, tuple(main_preds))
    main_intervals = {p.args[0].name for p in main_preds if p.is_interval}
    if not any(isinstance(a, Variable) and a.name in main_intervals for a in conn.args):
        raise DisconnectedAux(f"connective {conn.name} does not reference a main interval variable")
    if not aux_preds:
        if rel is TemporalRelation.NOW:
            return Decomposition(main, None, rel, conn)
        raise DisconnectedAux("connective present but no aux predicates")
    aux_var = _aux_variable(conn, aux_preds)
    return Decomposition(main, LambdaExpr(Variable(aux_var), tuple(aux_preds)), rel, conn)


def _aux_variable(conn: Predicate, aux_preds: list[Predicate]) -> str:
    aux_interval_vars = [p.args[0].name for p in aux_preds if p.is_interval]
    if not aux_interval_vars:
        raise DisconnectedAux("aux part has no interval predicate")
    for a in conn.args:
        if isinstance(a, Variable) and a.name in aux_interval_vars:
            return a.name
    # Aux predicates must at least hang off one of its interval predicates.
    aux_vars = set().union(*(p.variables() for p in aux_preds))
    if not aux_vars & set(aux_interval_vars):
        raise DisconnectedAux("aux predicates share no variable with an interval predicate")
    raise DisconnectedAux(f"connective {conn.name} does not reference an aux interval variable")


def strip_temporal(main: LambdaExpr) -> LambdaExpr:
    """Drop interval predicates and any connective over them."""
    kept = tuple(p for p in main.predicates if not (p.is_interval or p.is_connective))
    if not kept:
        raise EmptyResult("only temporal predicates present")
    if len(kept) == len(main.predicates):
        return main
    return LambdaExpr(main.unknown, kept)


def reform_lambda(expr: LambdaExpr, aux_interval: TimeInterval) -> LambdaExpr:
    """Replace the aux part with a concrete interval literal."""
    d = decompose(expr)
    if d.aux is None:
        raise NoAuxPart("expression has no aux part to replace")
    aux_var = d.aux.unknown.name
    aux_set = list(d.aux.predicates)
    out: list[Predicate] = []
    for p in expr.predicates:
        if p in aux_set:
            aux_set.remove(p)
            continue
        if p.is_connective:
            p = Predicate(p.name, tuple(
                IntervalLiteral(aux_interval) if isinstance(a, Variable) and a.name == aux_var else a
                for a in p.args))
        out.append(p)
    return LambdaExpr(expr.unknown, tuple(out))


def instantiate_candidate(main: LambdaExpr, candidate: str) -> LambdaExpr:
    """Substitute a candidate answer for the unknown and re-bind on its interval variable."""
    unk = main.unknown.name
    preds = tuple(
        replace(p, args=tuple(StringLiteral(candidate) if isinstance(a, Variable) and a.name == unk
                              else a for a in p.args))
        for p in main.predicates
    )
    intervals = [p for p in preds if p.is_interval]
    if not intervals:
        raise NoIntervalVariable("main part has no interval predicate to bind")
    return LambdaExpr(intervals[0].args[0], preds)
