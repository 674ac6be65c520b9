"""A small SPARQL-subset engine over the RDF view of a KbStore.

Supported: PREFIX, SELECT [DISTINCT] ?vars WHERE { ... } with basic triple
patterns, OPTIONAL { triples }, BIND(expr AS ?v) and FILTER(expr). Expressions
cover ``|| && !``, comparisons, BOUND, COALESCE, STR, LCASE, ``true``/``false``
and the date helpers ``tqa:earliest`` / ``tqa:latest``. Enough to run the
queries produced by :mod:`tqa.kb.sparql`, and the label lookups of the
endpoint client; nothing more.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Union

from ..temporal import CalendarPoint, TemporalError
from .sparql import PREFIXES, SparqlError
from .store import KbStore

XSD = PREFIXES["xsd"]
_DATE_TYPES = {XSD + "date", XSD + "gYear", XSD + "gYearMonth", XSD + "dateTime"}


@dataclass(frozen=True)
class Uri:
    value: str


@dataclass(frozen=True)
class Lit:
    value: str
    datatype: Optional[str] = None


Node = Union[Uri, Lit]


class SparqlSyntaxError(SparqlError):
    pass


class _EvalError(Exception):
    pass


# ------------------------------------------------------------------ RDF view


def store_to_triples(store: KbStore) -> list[tuple[Node, Node, Node]]:
    wd, P = PREFIXES["wd"], PREFIXES
    out: list[tuple[Node, Node, Node]] = []
    label, alt = Uri(P["rdfs"] + "label"), Uri(P["skos"] + "altLabel")
    for e in store.entities.values():
        out.append((Uri(wd + e.id), label, Lit(e.label)))
        out.extend((Uri(wd + e.id), alt, Lit(a)) for a in e.aliases)
    for f in store.facts:
        subj = Uri(wd + f.subject)
        stmt = Uri(P["wds"] + f.fact_id)
        out.append((subj, Uri(P["p"] + f.predicate), stmt))
        if f.object is not None:
            obj = _object_node(store, f.predicate, f.object)
            out.append((stmt, Uri(P["ps"] + f.predicate), obj))
            out.append((subj, Uri(P["wdt"] + f.predicate), obj))
        for kind, point in f.qualifiers.items():
            prop = getattr(store.time_props, kind)
            out.append((stmt, Uri(P["pq"] + prop), _date_node(point)))
    return out


def _object_node(store: KbStore, predicate: str, value: str) -> Node:
    if value in store.entities:
        return Uri(PREFIXES["wd"] + value)
    if store.time_props.kind_of(predicate):
        return _date_node(CalendarPoint.parse(value))
    return Lit(value)


def _date_node(p: CalendarPoint) -> Lit:
    dt = {"year": "gYear", "month": "gYearMonth", "day": "date"}[p.granularity.value]
    return Lit(str(p), XSD + dt)


# ------------------------------------------------------------------ tokenizer

_TOKENS = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>\s]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<dtype>\^\^)
  | (?P<op>\|\||&&|<=|>=|!=|[<>=!])
  | (?P<punct>[{}().,;*])
  | (?P<pname>[A-Za-z][A-Za-z0-9_\-]*:[A-Za-z0-9_\-]*)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>-?\d+(?:\.\d+)?)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if not m:
            raise SparqlSyntaxError(f"unexpected input at {pos}: {text[pos:pos + 20]!r}")
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group()))
        pos = m.end()
    out.append(("eof", ""))
    return out


# --------------------------------------------------------------------- parser


@dataclass
class Query:
    variables: list[str]
    distinct: bool
    patterns: list  # ("triple", s, p, o) | ("optional", [triples]) | ("bind", expr, var)
    filters: list


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    def peek(self, k: int = 0):
        return self.toks[self.i + k]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        t = self.next()
        if t[1].upper() != value.upper():
            raise SparqlSyntaxError(f"expected {value!r}, got {t[1]!r}")
        return t

    def word_is(self, value: str) -> bool:
        return self.peek()[1].upper() == value

    def parse(self) -> Query:
        while self.word_is("PREFIX"):
            self.next()
            kind, name = self.next()
            if kind != "pname" or not name.endswith(":"):
                raise SparqlSyntaxError(f"bad prefix name {name!r}")
            iri = self.next()
            if iri[0] != "iri":
                raise SparqlSyntaxError("prefix needs an IRI")
            self.prefixes[name[:-1]] = iri[1][1:-1]
        self.expect("SELECT")
        distinct = False
        if self.word_is("DISTINCT"):
            self.next()
            distinct = True
        variables = []
        while self.peek()[0] == "var":
            variables.append(self.next()[1][1:])
        if self.peek()[1] == "*":
            self.next()
        self.expect("WHERE")
        patterns, filters = self.group()
        if self.peek()[0] != "eof":
            raise SparqlSyntaxError(f"trailing input {self.peek()[1]!r}")
        return Query(variables, distinct, patterns, filters)

    def group(self):
        self.expect("{")
        patterns, filters = [], []
        while not self.peek()[1] == "}":
            if self.word_is("OPTIONAL"):
                self.next()
                inner, inner_filters = self.group()
                if inner_filters or any(p[0] != "triple" for p in inner):
                    raise SparqlSyntaxError("OPTIONAL supports triple patterns only")
                patterns.append(("optional", inner))
            elif self.word_is("FILTER"):
                self.next()
                self.expect("(")
                filters.append(self.expr())
                self.expect(")")
            elif self.word_is("BIND"):
                self.next()
                self.expect("(")
                e = self.expr()
                self.expect("AS")
                var = self.next()
                if var[0] != "var":
                    raise SparqlSyntaxError("BIND needs AS ?var")
                self.expect(")")
                patterns.append(("bind", e, var[1][1:]))
            elif self.peek()[0] == "eof":
                raise SparqlSyntaxError("unterminated group")
            else:
                s, p, o = self.term(), self.term(), self.term()
                patterns.append(("triple", s, p, o))
                if self.peek()[1] == ".":
                    self.next()
        self.expect("}")
        return patterns, filters

    def term(self):
        kind, value = self.next()
        if kind == "var":
            return ("var", value[1:])
        if kind == "iri":
            return ("node", Uri(value[1:-1]))
        if kind == "pname":
            return ("node", Uri(self.expand(value)))
        if kind == "word" and value == "a":
            return ("node", Uri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type"))
        if kind == "string":
            return ("node", self.literal(value))
        if kind == "number":
            return ("node", Lit(value, XSD + "integer"))
        raise SparqlSyntaxError(f"unexpected term {value!r}")

    def literal(self, raw: str) -> Lit:
        text = re.sub(r"\\(.)", r"\1", raw[1:-1])
        if self.peek()[0] == "dtype":
            self.next()
            kind, value = self.next()
            dt = self.expand(value) if kind == "pname" else value[1:-1]
            return Lit(text, dt)
        return Lit(text)

    def expand(self, pname: str) -> str:
        pfx, local = pname.split(":", 1)
        if pfx not in self.prefixes:
            raise SparqlSyntaxError(f"undeclared prefix {pfx!r}")
        return self.prefixes[pfx] + local

    # expressions: or > and > unary > comparison > primary
    def expr(self):
        left = self.and_expr()
        while self.peek()[1] == "||":
            self.next()
            left = ("or", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.unary()
        while self.peek()[1] == "&&":
            self.next()
            left = ("and", left, self.unary())
        return left

    def unary(self):
        if self.peek()[1] == "!":
            self.next()
            return ("not", self.unary())
        return self.comparison()

    def comparison(self):
        left = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] in ("<=", ">=", "<", ">", "=", "!="):
            op = self.next()[1]
            return ("cmp", op, left, self.primary())
        return left

    def primary(self):
        kind, value = self.peek()
        if value == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        upper = value.upper()
        if kind == "word" and upper in ("TRUE", "FALSE"):
            self.next()
            return ("const", upper == "TRUE")
        if (kind == "word" and upper in ("BOUND", "COALESCE", "STR", "LCASE")) or \
                (kind == "pname" and self.peek(1)[1] == "("):
            self.next()
            name = upper if kind == "word" else self.expand(value)
            self.expect("(")
            args = [self.expr()]
            while self.peek()[1] == ",":
                self.next()
                args.append(self.expr())
            self.expect(")")
            return ("call", name, args)
        t = self.term()
        return t


def parse_query(text: str) -> Query:
    return _Parser(text).parse()


# ------------------------------------------------------------------ evaluation


def _date_of(node) -> CalendarPoint:
    if isinstance(node, Lit) and (node.datatype in _DATE_TYPES or node.datatype is None):
        try:
            return CalendarPoint.parse(node.value.split("T", 1)[0])
        except TemporalError:
            pass
    raise _EvalError(f"not a date: {node}")


def _is_date(node) -> bool:
    return isinstance(node, Lit) and node.datatype in _DATE_TYPES


def _compare(op: str, a, b) -> bool:
    if _is_date(a) or _is_date(b):
        da, db = _date_of(a), _date_of(b)
        # granularity-aware: a <= b iff a can start no later than b can end
        if op == "<=":
            return da.earliest() <= db.latest()
        if op == ">=":
            return db.earliest() <= da.latest()
        if op == "<":
            return da.latest() < db.earliest()
        if op == ">":
            return db.latest() < da.earliest()
        if op == "=":
            return da == db
        return da != db
    if isinstance(a, bool) or isinstance(b, bool):
        raise _EvalError("boolean comparison")
    va, vb = a.value, b.value
    if op == "=":
        return type(a) is type(b) and va == vb
    if op == "!=":
        return not (type(a) is type(b) and va == vb)
    if isinstance(a, Lit) and isinstance(b, Lit):
        return {"<=": va <= vb, ">=": va >= vb, "<": va < vb, ">": va > vb}[op]
    raise _EvalError("ordering comparison of IRIs")


def _ebv(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, Lit):
        return bool(value.value)
    raise _EvalError("no effective boolean value")


def _eval(e, row: dict):
    tag = e[0]
    if tag == "var":
        if e[1] not in row:
            raise _EvalError(f"unbound ?{e[1]}")
        return row[e[1]]
    if tag == "node":
        return e[1]
    if tag == "const":
        return e[1]
    if tag == "not":
        return not _ebv(_eval(e[1], row))
    if tag == "or":
        # SPARQL error semantics: an error on one side is masked by true on the other
        try:
            left = _ebv(_eval(e[1], row))
        except _EvalError:
            left = None
        if left:
            return True
        right = _ebv(_eval(e[2], row))
        if right:
            return True
        if left is None:
            raise _EvalError("error in ||")
        return False
    if tag == "and":
        try:
            left = _ebv(_eval(e[1], row))
        except _EvalError:
            left = None
        if left is False:
            return False
        right = _ebv(_eval(e[2], row))
        if left is None:
            if right is False:
                return False
            raise _EvalError("error in &&")
        return right
    if tag == "cmp":
        return _compare(e[1], _eval(e[2], row), _eval(e[3], row))
    if tag == "call":
        name, args = e[1], e[2]
        if name == "BOUND":
            if args[0][0] != "var":
                raise _EvalError("BOUND needs a variable")
            return args[0][1] in row
        if name == "COALESCE":
            for a in args:
                try:
                    return _eval(a, row)
                except _EvalError:
                    continue
            raise _EvalError("COALESCE: all arguments errored")
        if name == "STR":
            v = _eval(args[0], row)
            return Lit(v.value)
        if name == "LCASE":
            v = _eval(args[0], row)
            if not isinstance(v, Lit):
                raise _EvalError("LCASE of an IRI")
            return Lit(v.value.lower(), v.datatype)
        fn = PREFIXES["tqa"]
        if name in (fn + "earliest", fn + "latest"):
            p = _date_of(_eval(args[0], row))
            day = p.earliest() if name.endswith("earliest") else p.latest()
            return Lit(str(CalendarPoint(*day)), XSD + "date")
        raise _EvalError(f"unknown function {name}")
    raise _EvalError(f"bad expression {e!r}")


class LocalSparqlEngine:
    def __init__(self, store: KbStore):
        self.triples = store_to_triples(store)
        self._by_pred: dict[Node, list] = defaultdict(list)
        for t in self.triples:
            self._by_pred[t[1]].append(t)

    def _match(self, pattern, row: dict):
        _, s, p, o = pattern
        candidates = self._by_pred.get(p[1], []) if p[0] == "node" else self.triples
        for triple in candidates:
            new = dict(row)
            ok = True
            for term, value in zip((s, p, o), triple):
                if term[0] == "node":
                    if term[1] != value:
                        ok = False
                        break
                elif term[1] in new:
                    if new[term[1]] != value:
                        ok = False
                        break
                else:
                    new[term[1]] = value
            if ok:
                yield new

    def _join(self, rows, patterns):
        for pat in patterns:
            rows = [new for r in rows for new in self._match(pat, r)]
        return rows

    def select(self, text: str) -> list[dict]:
        q = parse_query(text)
        rows: list[dict] = [{}]
        for pat in q.patterns:
            if pat[0] == "triple":
                rows = self._join(rows, [pat])
            elif pat[0] == "optional":
                out = []
                for r in rows:
                    ext = self._join([r], pat[1])
                    out.extend(ext or [r])
                rows = out
            else:
                _, expr, var = pat
                for r in rows:
                    try:
                        r[var] = _eval(expr, r)
                    except _EvalError:
                        pass
        for f in q.filters:
            kept = []
            for r in rows:
                try:
                    if _ebv(_eval(f, r)):
                        kept.append(r)
                except _EvalError:
                    pass
            rows = kept
        names = q.variables or sorted({k for r in rows for k in r})
        result = []
        seen = set()
        for r in rows:
            proj = tuple((n, r[n]) for n in names if n in r and not isinstance(r[n], bool))
            if q.distinct:
                if proj in seen:
                    continue
                seen.add(proj)
            result.append(dict(proj))
        return result

    def results_json(self, text: str) -> dict:
        """Run a query and render standard SPARQL JSON results."""
        q = parse_query(text)
        rows = self.select(text)
        bindings = []
        for r in rows:
            b = {}
            for k, v in r.items():
                if isinstance(v, Uri):
                    b[k] = {"type": "uri", "value": v.value}
                else:
                    cell = {"type": "literal", "value": v.value}
                    if v.datatype:
                        cell["datatype"] = v.datatype
                    b[k] = cell
            bindings.append(b)
        return {"head": {"vars": q.variables}, "results": {"bindings": bindings}}
