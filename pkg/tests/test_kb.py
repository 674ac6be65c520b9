import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from urllib.parse import parse_qs

import pytest

from conftest import WW2_QUESTION, WW2_AUX, WW2_REFORMED, WW2, small_store
from oracles import RELATIONS, answer_keys, kb_oracle, random_kb_expr, random_store, \
    random_year_interval
from tqa.answers import AnswerSource, FailureTag
from tqa.kb import (
    EndpointKb,
    KbFormatError,
    KbStore,
    LocalKb,
    LocalSparqlEngine,
    StoreUnavailable,
    generate_sparql,
    get_kb_answer,
    link,
    query_endpoint,
)
from tqa.kb.linking import Linker, similarity
from tqa.kb.sparql import MalformedResponse, UnresolvedMentions, UnsupportedQuery, \
    answerset_from_results
from tqa.lambda_expr import (
    IntervalLiteral,
    LambdaExpr,
    Predicate,
    StringLiteral,
    Variable,
    decompose,
    instantiate_candidate,
    parse_lambda,
    strip_temporal,
)
from tqa.temporal import CalendarPoint, TimeInterval


def labels_of(answers):
    return sorted(answers.labels())


class TestStore:
    def test_entity_interval_from_time_facts(self):
        s = small_store()
        assert s.entity_interval("Q362") == WW2
        assert s.entity_interval("Q30") is None

    def test_fact_qualifiers(self):
        s = small_store()
        assert s.fact("f1").interval() == TimeInterval.parse("1933-03-04 .. 1945-04-12")

    def test_round_trip(self):
        s = small_store()
        again = KbStore.from_dict(s.to_dict())
        assert again.to_dict() == s.to_dict()

    @pytest.mark.parametrize("doc", [
        {"entities": [{"id": "Q1", "label": ""}]},
        {"entities": [{"id": "Q1", "label": "a"}, {"id": "Q1", "label": "b"}]},
        {"facts": [{"subject": "Q1", "predicate": "P1", "object": "Q2",
                    "qualifiers": {"start_time": "1950", "end_time": "1940"}}]},
        {"facts": [{"subject": "Q1", "predicate": "P1", "object": "Q2",
                    "qualifiers": {"point_in_time": "1950", "start_time": "1940"}}]},
        {"facts": [{"subject": "Q1", "predicate": "P1", "object": "Q2",
                    "qualifiers": {"sometime": "1950"}}]},
        {"facts": [{"subject": "Q1", "predicate": "P580", "object": "not a date"}]},
        {"facts": [{"predicate": "P1"}]},
    ])
    def test_malformed(self, doc):
        with pytest.raises(KbFormatError):
            KbStore.from_dict(doc)

    def test_missing_file(self, tmp_path):
        from tqa.kb import KbError
        with pytest.raises(KbError):
            KbStore.load(tmp_path / "nope.json")

    def test_toy_store_size(self, toy_store):
        assert 40 <= len(toy_store) <= 60


class TestLinking:
    def test_alias_binds_case_insensitively(self):
        linked = link(parse_lambda(WW2_AUX), small_store())
        assert linked.bindings["Ww2"].kb_id == "Q362"
        assert linked.labels() == {"Ww2": "World War 2"}

    def test_unrelated_label_rejected(self):
        linked = link(parse_lambda('lambda t . interval(t, "Wombat")'), small_store())
        assert linked.unresolved == ("Wombat",)

    def test_role_object_template(self):
        linked = link(parse_lambda(WW2_QUESTION), small_store())
        assert linked.bindings["president of United States"].kb_id == "Q11696"
        assert linked.complete

    def test_threshold_is_tunable(self):
        expr = parse_lambda('lambda t . interval(t, "Second War")')
        assert not link(expr, small_store()).complete
        assert link(expr, small_store(), threshold=0.7).complete

    def test_similarity_bounds(self):
        assert similarity("WW2", "ww2") == 1.0
        assert 0.0 <= similarity("abc", "xyz") < 0.5

    def test_deterministic(self):
        s = small_store()
        e = parse_lambda(WW2_QUESTION)
        assert link(e, s) == link(e, s)


class TestEvaluator:
    def test_full_ww2_question(self):
        got = LocalKb(small_store()).answer_expr(parse_lambda(WW2_QUESTION))
        assert labels_of(got) == ["Franklin D. Roosevelt", "Harry S. Truman"]
        assert got.source is AnswerSource.KB and got.failure_tag is None

    def test_aux_interval(self):
        got = LocalKb(small_store()).answer_expr(parse_lambda(WW2_AUX))
        assert got.intervals() == [WW2]

    def test_reformed(self):
        got = LocalKb(small_store()).answer_expr(parse_lambda(WW2_REFORMED))
        assert labels_of(got) == ["Franklin D. Roosevelt", "Harry S. Truman"]

    def test_stripped_main_lists_candidates(self):
        main = strip_temporal(decompose(parse_lambda(WW2_QUESTION)).main)
        got = LocalKb(small_store()).answer_expr(main)
        assert labels_of(got) == ["Franklin D. Roosevelt", "Harry S. Truman", "Herbert Hoover"]

    def test_instantiated_candidate_interval(self):
        main = decompose(parse_lambda(WW2_QUESTION)).main
        got = LocalKb(small_store()).answer_expr(instantiate_candidate(main, "Herbert Hoover"))
        assert got.intervals() == [TimeInterval.parse("1929-03-04 .. 1933-03-04")]

    def test_missing_facts(self):
        s = small_store()
        s = s.replace(facts=[f for f in s.facts if f.subject != "Q362"])
        got = LocalKb(s).answer_expr(parse_lambda(WW2_AUX))
        assert not got and got.failure_tag is FailureTag.MISSING_FACTS

    def test_linking_failure(self):
        got = LocalKb(small_store()).answer_expr(parse_lambda('lambda t . interval(t, "Zanzibar")'))
        assert got.failure_tag is FailureTag.LINKING_FAILURE

    def test_get_kb_answer(self):
        s = small_store()
        got = get_kb_answer(link(parse_lambda(WW2_QUESTION), s), s)
        assert labels_of(got) == ["Franklin D. Roosevelt", "Harry S. Truman"]

    def test_now(self):
        e = parse_lambda('lambda a . have-org-role-91(h, a, "United States", "president") '
                         '^ interval(hi, h) ^ now(hi, hi)')
        got = LocalKb(small_store()).answer_expr(e, today=CalendarPoint(1950, 1, 1))
        assert labels_of(got) == ["Harry S. Truman"]

    def test_oracle_sample(self):
        rng = random.Random(3)
        for _ in range(40):
            store = random_store(rng)
            e = random_kb_expr(rng, store)
            assert answer_keys(LocalKb(store).answer_expr(e)) == kb_oracle(e, store), e


# -------------------------------------------------------------------- SPARQL


def random_sparql_expr(rng: random.Random, store: KbStore) -> LambdaExpr:
    """Expressions in the shapes the query generator supports."""
    labels = [e.label for e in store.entities.values()]
    preds, entity_vars, events = [], [], []
    for k in range(rng.randint(1, 2)):
        args = [Variable(f"e{k}")]
        events.append(f"e{k}")
        for _ in range(rng.choice([1, 2])):
            if rng.random() < 0.6:
                v = rng.choice(["x", "y"])
                entity_vars.append(v)
                args.append(Variable(v))
            else:
                args.append(StringLiteral(rng.choice(labels)))
        preds.append(Predicate(rng.choice(RELATIONS), tuple(args)))
    if rng.random() < 0.8:
        ev = rng.choice([Variable(v) for v in events + entity_vars]
                        + [StringLiteral(rng.choice(labels))])
        preds.append(Predicate("interval", (Variable("t"), ev)))
        if rng.random() < 0.6:
            preds.append(Predicate(rng.choice(["overlap", "before", "after"]),
                                   (Variable("t"), IntervalLiteral(random_year_interval(rng, 0.0)))))
    names = sorted({n for p in preds for n in p.variables()})
    return LambdaExpr(Variable(rng.choice(names)), tuple(preds))


def run_sparql(store, linked):
    q = generate_sparql(linked)
    return answerset_from_results(q, LocalSparqlEngine(store).results_json(q))


class TestSparql:
    def test_ww2_reformed(self):
        s = small_store()
        linked = link(parse_lambda(WW2_REFORMED), s)
        q = generate_sparql(linked)
        assert "p:P39" in q and "pq:P580" in q
        assert labels_of(run_sparql(s, linked)) == ["Franklin D. Roosevelt", "Harry S. Truman"]

    def test_entity_event(self):
        s = small_store()
        got = run_sparql(s, link(parse_lambda(WW2_AUX), s))
        assert got.intervals() == [WW2]

    def test_year_literal_keeps_year_granularity(self):
        results = {"head": {"vars": ["t_start", "t_end"]},
                   "results": {"bindings": [{"t_start": {"type": "literal", "value": "1939"},
                                             "t_end": {"type": "literal", "value": "1945"}}]}}
        q = "#tqa: unknown=t kind=interval\nSELECT ?t_start ?t_end WHERE { }"
        got = answerset_from_results(q, results)
        assert got.intervals() == [TimeInterval(CalendarPoint(1939), CalendarPoint(1945))]

    def test_unresolved(self):
        s = small_store()
        with pytest.raises(UnresolvedMentions):
            generate_sparql(link(parse_lambda('lambda t . interval(t, "Zanzibar")'), s))

    def test_variable_connective_rejected(self):
        s = small_store()
        with pytest.raises(UnsupportedQuery):
            generate_sparql(link(parse_lambda(WW2_QUESTION), s))

    def test_malformed_results(self):
        with pytest.raises(MalformedResponse):
            answerset_from_results("SELECT ?a WHERE { }", {"nope": 1})

    def test_differential(self):
        rng = random.Random(5)
        checked = 0
        while checked < 50:
            store = random_store(rng)
            e = random_sparql_expr(rng, store)
            linked = Linker(store).link(e)
            if not linked.complete:
                continue
            assert answer_keys(run_sparql(store, linked)) == \
                answer_keys(LocalKb(store).answer(linked)), e
            checked += 1


# ------------------------------------------------------------------ endpoint


class _Handler(BaseHTTPRequestHandler):
    engine: LocalSparqlEngine = None
    status = 200

    def do_POST(self):
        body = self.rfile.read(int(self.headers["Content-Length"])).decode()
        query = parse_qs(body)["query"][0]
        if self.status != 200:
            self.send_response(self.status)
            self.end_headers()
            return
        payload = json.dumps(self.engine.results_json(query)).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/sparql-results+json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def endpoint():
    handler = type("H", (_Handler,), {"engine": LocalSparqlEngine(small_store()), "status": 200})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/sparql", handler
    server.shutdown()


class TestEndpoint:
    def test_answers_like_local(self, endpoint):
        url, _ = endpoint
        kb = EndpointKb(url, timeout=5)
        got = kb.answer_expr(parse_lambda(WW2_QUESTION))
        assert labels_of(got) == ["Franklin D. Roosevelt", "Harry S. Truman"]

    def test_query_endpoint(self, endpoint):
        url, _ = endpoint
        s = small_store()
        got = query_endpoint(generate_sparql(link(parse_lambda(WW2_AUX), s)), url, 5)
        assert got.intervals() == [WW2]

    def test_server_error(self, endpoint):
        url, handler = endpoint
        handler.status = 503
        with pytest.raises(StoreUnavailable):
            query_endpoint("SELECT ?a WHERE { }", url, 5)

    def test_unreachable(self):
        with pytest.raises(StoreUnavailable):
            query_endpoint("SELECT ?a WHERE { }", "http://127.0.0.1:9/sparql", 0.5)
