"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are repeated in the pytest terminal summary.
"""
import json
import math
import random
import time

import pytest

from conftest import WW2_QUESTION, WW2_AUX, WW2_MAIN, WW2_REFORMED, WW2
from oracles import (
    LABELS,
    OracleNoBound,
    answer_keys,
    kb_oracle,
    random_kb_expr,
    random_select_instance,
    random_store,
)
from test_kb import random_sparql_expr, run_sparql
from tqa.data import toy_path
from tqa.evaluation import (
    AblationPlan,
    EvalReport,
    ItemResult,
    ItemScore,
    MatchMode,
    ablate,
    load_dataset,
    run_eval,
    score_item,
)
from tqa.extraction import Corpus
from tqa.kb import KbStore, LocalKb, get_kb_answer
from tqa.kb.linking import Linker
from tqa.lambda_expr import (
    decompose,
    instantiate_candidate,
    parse_lambda,
    print_lambda,
    reform_lambda,
)
from tqa.orchestrator import Mode
from tqa.querygen import lambda_to_query
from tqa.temporal import NoAuxBound, TemporalRelation, select


# collected for the terminal summary, see conftest.py
CRITERIA_LINES: list[str] = []


class Criterion:
    """Times a block and prints its verdict whether or not it raises."""

    def __init__(self, number: int, title: str, limit: float | None = None):
        self.number, self.title, self.limit = number, title, limit
        self.elapsed = None

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        # a block may report its own elapsed time when setup is excluded
        elapsed = self.elapsed if self.elapsed is not None else time.perf_counter() - self.t0
        ok = exc_type is None and (self.limit is None or elapsed < self.limit)
        budget = f" (limit {self.limit:g}s)" if self.limit else ""
        line = (f"{'PASS' if ok else 'FAIL'} criterion {self.number}: {self.title} "
                f"[{elapsed:.3f}s{budget}]")
        print("\n" + line)
        CRITERIA_LINES.append(line)
        if exc_type is None and not ok:
            pytest.fail(f"criterion {self.number} exceeded {self.limit}s: {elapsed:.3f}s")
        return False


@pytest.fixture(scope="module")
def toy():
    store = KbStore.load(toy_path("kb.json"))
    items, errors = load_dataset(toy_path("dataset.jsonl"))
    assert not errors
    return store, Corpus.load(toy_path("corpus.jsonl")), items


def test_c01_golden_decomposition():
    with Criterion(1, "golden decomposition", 1.0):
        d = decompose(parse_lambda(WW2_QUESTION))
        assert print_lambda(d.main) == WW2_MAIN
        assert print_lambda(d.aux) == WW2_AUX
        assert d.connective is TemporalRelation.OVERLAP


def test_c02_golden_reformation():
    with Criterion(2, "golden reformation", 1.0):
        text = print_lambda(reform_lambda(parse_lambda(WW2_QUESTION), WW2))
        assert text == WW2_REFORMED
        assert "interval_start:1939-09-01, interval_end:1945-09-02" in text


def test_c03_query_goldens():
    with Criterion(3, "query-generation goldens"):
        got = [
            lambda_to_query(parse_lambda(WW2_AUX)).text,
            lambda_to_query(parse_lambda(
                'lambda ri . release-01(r, "Titanic") ^ interval(ri, r)')).text,
            lambda_to_query(instantiate_candidate(decompose(parse_lambda(WW2_QUESTION)).main,
                                                  "Franklin D. Roosevelt")).text,
        ]
        assert got == ["When was Ww2?", "When did Titanic release?",
                       "When was Franklin D. Roosevelt president of United States?"]


def test_c04_select_oracle():
    rng = random.Random(2024)
    instances = [random_select_instance(rng) for _ in range(1000)]
    mismatches = 0
    with Criterion(4, "select() equals brute-force oracle on 1000 instances", 5.0):
        for cands, aux, rel in instances:
            try:
                want = select_oracle_or_none(cands, aux, rel)
                got = {c.entity_id for c in select(cands, aux, TemporalRelation(rel))}
            except NoAuxBound:
                got = None
            mismatches += got != want
        assert mismatches == 0, f"{mismatches} mismatches"


def select_oracle_or_none(cands, aux, rel):
    from oracles import select_oracle
    try:
        return select_oracle(cands, aux, rel)
    except OracleNoBound:
        return None


def test_c05_kb_oracle():
    rng = random.Random(77)
    cases = []
    for _ in range(200):
        # entity event times add up to two facts per label on top of these
        store = random_store(rng, max_facts=100 - 2 * len(LABELS))
        cases.append((store, random_kb_expr(rng, store)))
    assert all(len(s) <= 100 and len(e.predicates) <= 4 for s, e in cases)
    # the brute-force oracle is deliberately slow, so only the evaluator is timed
    expected = [kb_oracle(e, s) for s, e in cases]
    with Criterion(5, "get_kb_answer equals exhaustive enumeration on 200 stores", 30.0) as c:
        t0 = time.perf_counter()
        got = [answer_keys(get_kb_answer(Linker(s).link(e), s)) for s, e in cases]
        c.elapsed = time.perf_counter() - t0
        bad = [e for (s, e), g, w in zip(cases, got, expected) if g != w]
        assert not bad, f"{len(bad)} mismatches, first: {print_lambda(bad[0])}"


def test_c06_ablation_recovery(toy):
    store, corpus, items = toy
    plan = AblationPlan.load(toy_path("ablation.json"))
    with Criterion(6, "ablation recovery: Only-KB <= 0.30, KB+Text = 1.00, monotone", 10.0):
        assert len(items) == 20 and len(plan.delete_qualifiers) == 15
        kb = LocalKb(ablate(store, plan))
        only = run_eval(items, kb, corpus, Mode.ONLY_KB)
        both = run_eval(items, kb, corpus, Mode.KB_TEXT)
        print(f"  only-kb macro F1 {only.macro_f1:.3f}, kb+text macro F1 {both.macro_f1:.3f}")
        assert only.macro_f1 <= 0.30
        assert both.macro_f1 == pytest.approx(1.0, abs=1e-12)
        for metric in ("macro_precision", "macro_recall", "macro_f1"):
            assert getattr(only, metric) <= getattr(both, metric)
        for a, b in zip(only.items, both.items):
            assert a.score.f1 <= b.score.f1, a.id


def test_c07_conservativeness(toy):
    store, corpus, items = toy
    with Criterion(7, "conservativeness on the unablated suite"):
        kb = LocalKb(store)
        only = run_eval(items, kb, corpus, Mode.ONLY_KB, keep_traces=True)
        both = run_eval(items, kb, corpus, Mode.KB_TEXT, keep_traces=True)
        assert [r.predicted for r in only.items] == [r.predicted for r in both.items]
        for r in only.items + both.items:
            assert r.trace.extraction_count == 0
            assert not any(s.stage.startswith("extract") for s in r.trace.steps)


def test_c08_metrics():
    with Criterion(8, "metric correctness"):
        for pred, gold, want in [({"A", "B"}, {"A"}, (0.5, 1.0, 2 / 3)),
                                 (set(), {"A"}, (0.0, 0.0, 0.0)),
                                 ({"A"}, {"A", "B", "C"}, (1.0, 1 / 3, 0.5))]:
            s = score_item(pred, gold)
            for got, exp in zip((s.precision, s.recall, s.f1), want):
                assert abs(got - exp) <= 1e-9
        rng = random.Random(8)
        rows = [tuple(rng.random() for _ in range(3)) for _ in range(500)]
        report = EvalReport(Mode.KB_TEXT, MatchMode.EXACT, [
            ItemResult(str(i), [], ["x"], ItemScore(*r), "Unanswered", None, 0)
            for i, r in enumerate(rows)])
        for k, attr in enumerate(("macro_precision", "macro_recall", "macro_f1")):
            assert abs(getattr(report, attr) - math.fsum(r[k] for r in rows) / len(rows)) <= 1e-12


# Every predicate shape the grammar admits: event predicates of arity one to
# four mixing variables and strings, interval over a variable or a string,
# each connective against a variable or an interval literal at day, month,
# year and open granularity.
ROUND_TRIP = [
    'lambda ti . interval(ti, "Ww2")',
    'lambda ti . interval(ti, "Second World War")',
    'lambda ti . interval(ti, "Apollo 11")',
    "lambda ti . interval(ti, \"Sgt. Pepper's\")",
    'lambda ri . release-01(r, "Titanic") ^ interval(ri, r)',
    'lambda ri . bear-02(r, "Ada Lovelace") ^ interval(ri, r)',
    'lambda ri . marry-01(r, "Pierre Curie", "Marie Curie") ^ interval(ri, r)',
    'lambda ri . die-01(r, "Alan Turing") ^ interval(ri, r)',
    'lambda a . have-org-role-91(h, a, "France", "president")',
    'lambda a . have-org-role-91(h, a, "United States", "president") ^ interval(hi, h)',
    WW2_QUESTION,
    WW2_REFORMED,
    'lambda a . have-org-role-91(h, a, "Spain", "king") ^ interval(hi, h)',
    'lambda ti . interval(ti, "Fall of the Berlin Wall")',
    'lambda a . have-org-role-91(h, a, "United Kingdom", "prime minister") ^ interval(hi, h) '
    '^ interval(ti, "Suez Crisis") ^ after(hi, ti)',
    'lambda a . have-org-role-91(h, a, "United Kingdom", "prime minister") ^ interval(hi, h) '
    '^ interval(ti, "Suez Crisis") ^ before(hi, ti)',
    'lambda a . have-org-role-91(h, a, "United States", "president") ^ interval(hi, h) '
    '^ now(hi, hi)',
    'lambda a . have-org-role-91(h, a, "Germany", "chancellor") ^ interval(hi, h) '
    '^ overlap(hi, (interval_start:1939, interval_end:1945))',
    'lambda a . have-org-role-91(h, a, "Germany", "chancellor") ^ interval(hi, h) '
    '^ before(hi, (interval_start:1990-10, interval_end:1990-10))',
    'lambda a . have-org-role-91(h, a, "Germany", "chancellor") ^ interval(hi, h) '
    '^ after(hi, (interval_start:1949-05-23, interval_end:))',
    'lambda a . have-org-role-91(h, a, "Germany", "chancellor") ^ interval(hi, h) '
    '^ overlap(hi, (interval_start:, interval_end:1900))',
    'lambda a . have-org-role-91(h, a, "Germany", "chancellor") ^ interval(hi, h) '
    '^ overlap(hi, (interval_start:, interval_end:))',
    'lambda a . member-01(m, a, "Beatles") ^ interval(mi, m) ^ interval(ti, "Apollo 11") '
    '^ overlap(mi, ti)',
    'lambda a . win-01(w, a, "Nobel Prize in Physics") ^ interval(wi, w) '
    '^ interval(ti, "World War 1") ^ before(wi, ti)',
    'lambda a . coach-01(c, a, "Brazil") ^ interval(ci, c) ^ interval(ti, "1970 FIFA World Cup") '
    '^ overlap(ci, ti)',
    'lambda x . capital-01(k, x, "Germany") ^ interval(ki, k) '
    '^ overlap(ki, (interval_start:1960, interval_end:1960))',
    'lambda a . have-org-role-91(h, a, o, "president") ^ country(o, "France")',
    'lambda a . p(a)',
    'lambda a . p(a, b) ^ q(b, c) ^ r(c, "Z")',
    'lambda a . p(a, b, c, d)',
    'lambda b . p(a, b) ^ q(a, "x y z")',
    'lambda t . interval(t, e) ^ event-01(e, "Moon landing")',
    'lambda t . event-01(e, "Moon landing") ^ interval(t, e) '
    '^ after(t, (interval_start:1969-07-20, interval_end:1969-07-20))',
    'lambda a . play-01(p, a, "Real Madrid") ^ interval(pi, p) ^ interval(ti, "El Clasico 2009") '
    '^ overlap(pi, ti)',
    'lambda a . govern-01(g, a, "California") ^ interval(gi, g) ^ interval(ti, "Terminator 2") '
    '^ after(gi, ti)',
    'lambda a . lead-02(l, a, "Soviet Union") ^ interval(li, l) ^ interval(ti, "Cuban Missile Crisis") '
    '^ overlap(li, ti)',
    'lambda a . have-org-role-91(h, a, "Canada", "prime minister") ^ interval(hi, h) '
    '^ interval(ti, "Expo 67") ^ overlap(hi, ti)',
    'lambda a . have-org-role-91(h, a, "India", "prime minister") ^ interval(hi, h) '
    '^ interval(ti, "Green Revolution") ^ before(hi, ti)',
    'lambda a . have-org-role-91(h, a, "Japan", "emperor") ^ interval(hi, h) '
    '^ interval(ti, "Tokyo Olympics 1964") ^ overlap(hi, ti)',
    'lambda a . have-org-role-91(h, a, "Italy", "president") ^ interval(hi, h) '
    '^ overlap(hi, (interval_start:1946-06-02, interval_end:1948-05-11))',
    'lambda a . have-org-role-91(h, a, "Italy", "president") ^ interval(hi, h) ^ now(hi, hi)',
    'lambda ri . found-01(r, "Royal Society") ^ interval(ri, r)',
    'lambda ri . sign-01(r, "Treaty of Versailles") ^ interval(ri, r)',
    'lambda ri . open-01(r, "Channel Tunnel") ^ interval(ri, r)',
    'lambda ri . sink-01(r, "Lusitania") ^ interval(ri, r)',
    'lambda ri . launch-01(r, "Sputnik 1") ^ interval(ri, r)',
    'lambda ri . invent-01(r, "Alexander Graham Bell", "telephone") ^ interval(ri, r)',
    'lambda ti . interval(ti, "Hundred Years\' War")',
    'lambda a . have-org-role-91(h, a, "Ancient Rome", "emperor") ^ interval(hi, h) '
    '^ before(hi, (interval_start:0476, interval_end:0476))',
    'lambda a . have-org-role-91(h, a, "Mars", "governor") ^ interval(hi, h) '
    '^ after(hi, (interval_start:2099-12-31, interval_end:))',
]


def test_c09_round_trip():
    with Criterion(9, "parse/print/parse round trip on 50 expressions"):
        assert len(ROUND_TRIP) == 50 and len(set(ROUND_TRIP)) == 50
        for text in ROUND_TRIP:
            e = parse_lambda(text)
            assert parse_lambda(print_lambda(e)) == e, text
        names = {p.name for t in ROUND_TRIP for p in parse_lambda(t).predicates}
        assert {"interval", "overlap", "before", "after", "now"} <= names


def test_c10_sparql_differential():
    rng = random.Random(10)
    with Criterion(10, "generated SPARQL agrees with get_kb_answer on 50 expressions"):
        checked, tries = 0, 0
        while checked < 50:
            tries += 1
            assert tries < 5000
            store = random_store(rng)
            e = random_sparql_expr(rng, store)
            linked = Linker(store).link(e)
            if not linked.complete:
                continue
            got = answer_keys(run_sparql(store, linked))
            assert got == answer_keys(get_kb_answer(linked, store)), print_lambda(e)
            checked += 1


def test_summary_json_serializable(toy):
    # the report the ablation study prints must survive a JSON round trip
    store, corpus, items = toy
    report = run_eval(items[:3], LocalKb(store), corpus, Mode.ONLY_KB)
    assert json.loads(json.dumps(report.to_dict()))["counts"]["items"] == 3
