"""Targeted extraction of one temporal fact from text."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from ..lambda_expr import LambdaExpr
from ..querygen import QuerySource, TextQuery, lambda_to_query
from ..temporal import TimeInterval
from .corpus import Corpus, Passage
from .ranking import (
    DEFAULT_K,
    DEFAULT_TOP_N,
    Reranker,
    rank_passages,
    retrieve_scored,
)
from .services import RemoteReader
from .text import content_terms, find_dates, index_terms, split_sentences

logger = logging.getLogger(__name__)


class NoDateFound(Exception):
    pass


@dataclass(frozen=True)
class PassageRef:
    doc_id: str
    index: int


@dataclass(frozen=True)
class ExtractedFact:
    interval: TimeInterval
    source_sentence: str
    passage_ref: PassageRef
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "interval": str(self.interval),
            "source_sentence": self.source_sentence,
            "passage": {"doc_id": self.passage_ref.doc_id, "index": self.passage_ref.index},
            "confidence": self.confidence,
        }


def _overlap(query_terms: Sequence[str], sentence: str) -> float:
    if not query_terms:
        return 0.0
    return len(set(query_terms) & set(index_terms(sentence))) / len(set(query_terms))


def extract_time(query: TextQuery, passages: Sequence[Passage],
                 reader: Optional[RemoteReader] = None) -> ExtractedFact:
    """Anchor date from the dated sentence sharing the most query terms.

    Passages are scanned in the given (rank) order, so ties go to the
    higher-ranked passage and then the earlier sentence.
    """
    if reader is not None:
        return _extract_remote(query, passages, reader)
    terms = content_terms(query.text)
    best: Optional[tuple[float, str, Passage]] = None
    for p in passages:
        for sentence in split_sentences(p.text):
            score = _overlap(terms, sentence)
            if score <= 0 or not find_dates(sentence):
                continue
            if best is None or score > best[0]:
                best = (score, sentence, p)
    if best is None:
        raise NoDateFound(f"no dated sentence related to {query.text!r}")
    score, sentence, p = best
    anchor = find_dates(sentence)[0].point
    return ExtractedFact(TimeInterval.point(anchor), sentence, PassageRef(p.doc_id, p.index),
                         round(score, 12))


def _extract_remote(query: TextQuery, passages: Sequence[Passage],
                    reader: RemoteReader) -> ExtractedFact:
    if not passages:
        raise NoDateFound("no passages")
    context = "\n\n".join(p.text for p in passages)
    answer, sentence = reader.read(query, context)
    dates = find_dates(answer)
    if not dates:
        raise NoDateFound(f"reader answer {answer!r} holds no date")
    anchor = dates[0].point
    if sentence is None or not find_dates(sentence):
        sentence = next((s for p in passages for s in split_sentences(p.text)
                         if answer in s and find_dates(s)), answer)
    ref = next((p for p in passages if sentence in p.text), passages[0])
    return ExtractedFact(TimeInterval.point(anchor), sentence, PassageRef(ref.doc_id, ref.index),
                         _overlap(content_terms(query.text), sentence))


_PAIR_CONNECTOR = re.compile(r"^\s*(?:to|until|till|through|and|-|–|—)\s*$", re.IGNORECASE)
_SINCE = re.compile(r"\bsince\s*$", re.IGNORECASE)
_UNTIL = re.compile(r"\b(?:until|till)\s*$", re.IGNORECASE)


def complete_interval(fact: ExtractedFact) -> ExtractedFact:
    """Grow the anchor point into an interval using a second date in the same sentence."""
    sentence = fact.source_sentence
    mentions = find_dates(sentence)
    anchor_point = fact.interval.start
    idx = next((i for i, m in enumerate(mentions) if m.point == anchor_point), None)
    if idx is None:
        return fact
    anchor = mentions[idx]
    partner = None
    # paired forms: "from X to Y", "between X and Y", "X - Y"
    if idx + 1 < len(mentions) and _PAIR_CONNECTOR.match(sentence[anchor.end:mentions[idx + 1].start]):
        partner = mentions[idx + 1]
    elif idx > 0 and _PAIR_CONNECTOR.match(sentence[mentions[idx - 1].end:anchor.start]):
        partner = mentions[idx - 1]
    if partner is None:
        before = sentence[:anchor.start]
        if _SINCE.search(before):
            return replace(fact, interval=TimeInterval(anchor.point, None))
        if _UNTIL.search(before):
            return replace(fact, interval=TimeInterval(None, anchor.point))
        others = [m for m in mentions if m is not anchor]
        if not others:
            return fact
        partner = others[0]
    first, second = sorted([anchor.point, partner.point], key=lambda p: (p.earliest(), p.latest()))
    if first.earliest() > second.latest():
        return fact
    return replace(fact, interval=TimeInterval(first, second))


# ------------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class ExtractionConfig:
    k: int = DEFAULT_K
    top_n: int = DEFAULT_TOP_N
    reranker: Optional[Reranker] = None
    reader: Optional[RemoteReader] = None
    verbs: Optional[Mapping[str, dict]] = None


@dataclass
class ExtractionRecord:
    """Everything one run of the pipeline saw; serialized into the answer trace."""

    expr: str
    query: Optional[TextQuery] = None
    documents: list[tuple[str, float, int]] = field(default_factory=list)
    passages: list[Passage] = field(default_factory=list)
    fact: Optional[ExtractedFact] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "expr": self.expr,
            "query": None if self.query is None else {
                "text": self.query.text,
                "kind": self.query.kind.value,
                "source": self.query.source.value,
                "entities": list(self.query.entities),
            },
            "documents": [
                {"title": t, "title_similarity": s, "keyword_score": kw}
                for t, s, kw in self.documents
            ],
            "passages": [
                {"doc_id": p.doc_id, "index": p.index, "score": p.score, "text": p.text}
                for p in self.passages
            ],
            "fact": None if self.fact is None else self.fact.to_dict(),
            "error": self.error,
        }


def run_extraction(expr: LambdaExpr, corpus: Corpus, *,
                   labels: Optional[Mapping[str, str]] = None,
                   question_entities: Sequence[str] = (),
                   source: Optional[QuerySource] = None,
                   config: ExtractionConfig = ExtractionConfig(),
                   record: Optional[ExtractionRecord] = None) -> ExtractedFact:
    """lambda_to_query, then retrieval, ranking, extraction and interval completion.

    Steps are written into ``record`` as they happen so a failed run still
    leaves a useful trace entry.
    """
    record = record if record is not None else ExtractionRecord(str(expr))
    query = lambda_to_query(expr, labels, config.verbs, source)
    return extract_for_query(query, corpus, question_entities=question_entities,
                             config=config, record=record)


def extract_for_query(query: TextQuery, corpus: Corpus, *,
                      question_entities: Sequence[str] = (),
                      config: ExtractionConfig = ExtractionConfig(),
                      record: Optional[ExtractionRecord] = None) -> ExtractedFact:
    record = record if record is not None else ExtractionRecord("")
    record.query = query
    retrieved = retrieve_scored(query, corpus, config.k, question_entities)
    record.documents = [(r.document.title, r.title_similarity, r.keyword_score) for r in retrieved]
    docs = [r.document for r in retrieved]
    passages = rank_passages(query, docs, config.top_n, config.reranker, corpus)
    record.passages = passages
    if not passages:
        raise NoDateFound(f"no passages retrieved for {query.text!r}")
    fact = complete_interval(extract_time(query, passages, config.reader))
    record.fact = fact
    logger.debug("extracted %s for %r from %s", fact.interval, query.text, fact.passage_ref)
    return fact


def extract_from_text(expr: LambdaExpr, corpus: Corpus, **kwargs) -> ExtractedFact:
    return run_extraction(expr, corpus, **kwargs)
