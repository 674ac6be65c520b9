from .endpoint import EndpointKb, query_endpoint
from .evaluator import Evaluator, get_kb_answer
from .linking import DEFAULT_THRESHOLD, LinkedLambda, Linker, link
from .sparql import generate_sparql
from .sparql_local import LocalSparqlEngine
from .store import KbEntity, KbError, KbFact, KbFormatError, KbStore, StoreUnavailable, TimeProperties


class LocalKb(Evaluator):
    """In-memory KB backend: fuzzy linking plus the conjunctive evaluator."""

    def __init__(self, store: KbStore, threshold: float = DEFAULT_THRESHOLD, predicate_table=None):
        super().__init__(store, Linker(store, threshold, predicate_table))


__all__ = [
    "EndpointKb", "Evaluator", "KbEntity", "KbError", "KbFact", "KbFormatError", "KbStore",
    "LinkedLambda", "Linker", "LocalKb", "LocalSparqlEngine", "StoreUnavailable",
    "TimeProperties", "generate_sparql", "get_kb_answer", "link", "query_endpoint",
]
