"""Document retrieval and BM25 passage ranking with a pluggable re-ranker."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Optional, Protocol, Sequence

from rapidfuzz import fuzz

from ..kb.linking import normalize
from ..querygen import TextQuery
from .corpus import Corpus, Document, EmptyCorpus, Passage
from .text import content_terms, index_terms, tokens

logger = logging.getLogger(__name__)

DEFAULT_K = 5
DEFAULT_TOP_N = 3
BM25_POOL = 50
K1 = 1.2
B = 0.75
MIN_TITLE_SIMILARITY = 0.3


@dataclass(frozen=True)
class RetrievedDocument:
    document: Document
    title_similarity: float
    keyword_score: int


def title_similarity(entity: str, title: str) -> float:
    return fuzz.ratio(normalize(entity), normalize(title)) / 100.0


def retrieve_scored(query: TextQuery, corpus: Corpus, k: int = DEFAULT_K,
                    entities: Sequence[str] = ()) -> list[RetrievedDocument]:
    """Two-stage retrieval; ``entities`` adds mentions beyond the query's own."""
    if len(corpus) == 0:
        raise EmptyCorpus("corpus has no documents")
    sims: dict[str, float] = {}
    for entity in dict.fromkeys(tuple(query.entities) + tuple(entities)):
        scored = [(title_similarity(entity, d.title), d.doc_id) for d in corpus]
        best = max(s for s, _ in scored)
        if best < MIN_TITLE_SIMILARITY:
            continue
        for s, doc_id in scored:
            if s == best:
                sims[doc_id] = max(sims.get(doc_id, 0.0), s)
    terms = set(content_terms(query.text))
    results = []
    for d in corpus:
        counts = Counter(index_terms(d.title + "\n" + d.body))
        kw = sum(counts[t] for t in terms)
        if d.doc_id in sims or kw > 0:
            results.append(RetrievedDocument(d, sims.get(d.doc_id, 0.0), kw))
    results.sort(key=lambda r: (-r.title_similarity, -r.keyword_score, r.document.title))
    return results[:k]


def retrieve_documents(query: TextQuery, corpus: Corpus, k: int = DEFAULT_K,
                       entities: Sequence[str] = ()) -> list[Document]:
    return [r.document for r in retrieve_scored(query, corpus, k, entities)]


def bm25_scores(query_terms: Sequence[str], passages: Sequence[Sequence[str]],
                k1: float = K1, b: float = B) -> list[float]:
    """Okapi BM25 with the non-negative idf ``ln(1 + (N - n + 0.5) / (n + 0.5))``."""
    n_docs = len(passages)
    if n_docs == 0:
        return []
    avgdl = sum(len(p) for p in passages) / n_docs or 1.0
    df = Counter(t for p in passages for t in set(p))
    counts = [Counter(p) for p in passages]
    scores = []
    for p, tf in zip(passages, counts):
        s = 0.0
        for t in set(query_terms):
            f = tf[t]
            if not f:
                continue
            idf = math.log(1.0 + (n_docs - df[t] + 0.5) / (df[t] + 0.5))
            s += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * len(p) / avgdl))
        scores.append(s)
    return scores


class Reranker(Protocol):
    def rerank(self, query: TextQuery, passages: list[Passage]) -> list[Passage]: ...


class IdentityReranker:
    """Keeps the lexical scores and order."""

    def rerank(self, query: TextQuery, passages: list[Passage]) -> list[Passage]:
        return list(passages)


def _order(passages: list[Passage]) -> list[Passage]:
    return sorted(passages, key=lambda p: (-p.score, p.doc_id, p.index))


def rank_passages(query: TextQuery, docs: Sequence[Document], top_n: int = DEFAULT_TOP_N,
                  reranker: Optional[Reranker] = None, corpus: Optional[Corpus] = None,
                  pool: int = BM25_POOL) -> list[Passage]:
    """BM25 over the passages of ``docs``, top ``pool``, re-rank, keep ``top_n``."""
    if not docs:
        return []
    corpus = corpus or Corpus(docs)
    passages = [p for d in docs for p in corpus.passages(d)]
    terms = content_terms(query.text)
    scores = bm25_scores(terms, [index_terms(p.text) for p in passages])
    scored = _order([replace(p, score=s) for p, s in zip(passages, scores)])[:pool]
    reranked = (reranker or IdentityReranker()).rerank(query, scored)
    return _order(reranked)[:top_n]
