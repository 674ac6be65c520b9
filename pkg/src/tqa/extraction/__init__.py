from .corpus import Corpus, CorpusError, Document, EmptyCorpus, Passage, split_passages
from .extract import (
    ExtractedFact,
    ExtractionConfig,
    ExtractionRecord,
    NoDateFound,
    PassageRef,
    complete_interval,
    extract_for_query,
    extract_from_text,
    extract_time,
    run_extraction,
)
from .ranking import (
    IdentityReranker,
    bm25_scores,
    rank_passages,
    retrieve_documents,
    retrieve_scored,
)
from .services import RemoteReader, RemoteReranker, ServiceError

__all__ = [
    "Corpus", "CorpusError", "Document", "EmptyCorpus", "ExtractedFact", "ExtractionConfig",
    "ExtractionRecord", "IdentityReranker", "NoDateFound", "Passage", "PassageRef",
    "RemoteReader", "RemoteReranker", "ServiceError", "bm25_scores", "complete_interval",
    "extract_for_query", "extract_from_text", "extract_time", "rank_passages", "retrieve_documents",
    "retrieve_scored", "run_extraction", "split_passages",
]
