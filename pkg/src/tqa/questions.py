"""A deliberately small template parser from English questions to lambda expressions.

Only three question shapes are understood; anything else has to be given
as a lambda string.
"""

from __future__ import annotations

import re

from .lambda_expr import (
    INTERVAL,
    LambdaExpr,
    Predicate,
    StringLiteral,
    Variable,
)
from .querygen import load_verb_table

TEMPLATES = (
    "Who was the R of E {during|before|after} X?",
    "When {was|did} E [V]?",
    "Who was the R of E?",
)

_CONNECTIVE_WORDS = {"during": "overlap", "before": "before", "after": "after"}

_ROLE_CONSTRAINED = re.compile(
    r"^who\s+(?:was|is)\s+the\s+(?P<role>.+?)\s+of\s+(?P<org>.+?)\s+"
    r"(?P<conn>during|before|after)\s+(?P<event>.+?)\s*\?$",
    re.IGNORECASE,
)
_ROLE = re.compile(r"^who\s+(?:was|is)\s+the\s+(?P<role>.+?)\s+of\s+(?P<org>.+?)\s*\?$", re.IGNORECASE)
_WHEN = re.compile(r"^when\s+(?P<aux>was|did)\s+(?P<rest>.+?)\s*\?$", re.IGNORECASE)


class UnsupportedQuestion(ValueError):
    def __init__(self, question: str):
        self.question = question
        self.templates = TEMPLATES
        super().__init__(
            f"unsupported question {question!r}; supported templates: " + "; ".join(TEMPLATES)
        )


def _strip_article(text: str) -> str:
    return re.sub(r"^the\s+", "", text.strip(), flags=re.IGNORECASE)


def _role_predicate(org: str, role: str) -> Predicate:
    return Predicate(
        "have-org-role-91",
        (Variable("h"), Variable("a"), StringLiteral(_strip_article(org)), StringLiteral(role.lower())),
    )


def parse_question(text: str, verbs: dict | None = None) -> LambdaExpr:
    q = " ".join(text.split())
    m = _ROLE_CONSTRAINED.match(q)
    if m:
        return LambdaExpr(Variable("a"), (
            _role_predicate(m["org"], m["role"]),
            Predicate(INTERVAL, (Variable("hi"), Variable("h"))),
            Predicate(INTERVAL, (Variable("ti"), StringLiteral(_strip_article(m["event"])))),
            Predicate(_CONNECTIVE_WORDS[m["conn"].lower()], (Variable("hi"), Variable("ti"))),
        ))
    m = _ROLE.match(q)
    if m:
        return LambdaExpr(Variable("a"), (_role_predicate(m["org"], m["role"]),))
    m = _WHEN.match(q)
    if m:
        return _when_question(m["aux"].lower(), m["rest"], verbs or load_verb_table())
    raise UnsupportedQuestion(text)


def _when_question(aux: str, rest: str, verbs: dict) -> LambdaExpr:
    words = rest.split()
    by_surface = {
        (entry["form"], entry["surface"].lower()): stem for stem, entry in verbs.items()
    }
    verb = words[-1].lower() if len(words) > 1 else None
    stem = by_surface.get((aux, verb)) if verb else None
    if aux == "did" and verb and stem is None:
        stem = verb
    if stem is None:
        # Entity-based event: "When was World War 2?"
        return LambdaExpr(Variable("ti"), (Predicate(INTERVAL, (Variable("ti"), StringLiteral(rest))),))
    entity = " ".join(words[:-1])
    return LambdaExpr(Variable("ri"), (
        Predicate(f"{stem}-01", (Variable("r"), StringLiteral(entity))),
        Predicate(INTERVAL, (Variable("ri"), Variable("r"))),
    ))
