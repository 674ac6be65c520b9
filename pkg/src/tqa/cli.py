"""``tqa`` command line: ask, eval, extract and ablate.

Exit codes: 0 answered, 1 usage or configuration error, 2 no answer.
Every flag can also come from an environment variable prefixed ``TQA_``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .extraction import (
    Corpus,
    CorpusError,
    ExtractionConfig,
    ExtractionRecord,
    NoDateFound,
    RemoteReader,
    RemoteReranker,
    ServiceError,
    extract_for_query,
)
from .kb import EndpointKb, KbError, KbStore, LocalKb
from .kb.linking import DEFAULT_THRESHOLD
from .lambda_expr import LambdaError, parse_lambda
from .orchestrator import DEFAULT_EXTRACTION_BUDGET, Mode, Orchestrator, OrchestratorConfig, Verdict
from .querygen import QueryKind, QuerySource, TextQuery, UnrenderableLambda, lambda_to_query
from .questions import UnsupportedQuestion, parse_question
from .temporal import CalendarPoint, TemporalError

logger = logging.getLogger("tqa")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_ANSWER = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name: str, default=None):
    return os.environ.get(f"TQA_{name}", default)


def _add_kb(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kb", default=_env("KB"), help="mock-KB JSON file")
    p.add_argument("--endpoint", default=_env("KB_ENDPOINT"), help="SPARQL endpoint URL")
    p.add_argument("--kb-timeout-ms", type=int, default=int(_env("KB_TIMEOUT_MS", "30000")))
    p.add_argument("--link-threshold", type=float,
                   default=float(_env("LINK_THRESHOLD", DEFAULT_THRESHOLD)))


def _add_extraction(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", default=_env("CORPUS"),
                   help="directory of .txt files or a JSON-lines file")
    p.add_argument("--ranker-url", default=_env("RANKER_URL"))
    p.add_argument("--rcqa-url", default=_env("RCQA_URL"))
    p.add_argument("--top-k", type=int, default=int(_env("TOP_K", "5")),
                   help="documents kept by retrieval")
    p.add_argument("--top-n", type=int, default=int(_env("TOP_N", "3")),
                   help="passages handed to extraction")


def _add_run(p: argparse.ArgumentParser) -> None:
    _add_kb(p)
    _add_extraction(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=_env("MODE", "kb-text"))
    p.add_argument("--today", default=_env("TODAY"), help="YYYY-MM-DD, needed for 'now'")
    p.add_argument("--extraction-budget", type=int,
                   default=int(_env("EXTRACTION_BUDGET", DEFAULT_EXTRACTION_BUDGET)))
    p.add_argument("--trace", default=_env("TRACE"), help="write the answer trace JSON here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tqa", description="Temporal question answering over KB and text.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ask = sub.add_parser("ask", help="answer one question or λ-expression")
    src = ask.add_mutually_exclusive_group(required=True)
    src.add_argument("--lambda", dest="lambda_", help="λ-expression")
    src.add_argument("--question", help="English question matching a supported template")
    _add_run(ask)

    ev = sub.add_parser("eval", help="evaluate a JSON-lines dataset")
    ev.add_argument("dataset")
    _add_run(ev)
    ev.add_argument("--ablation", help="ablation plan applied to the KB before evaluating")
    ev.add_argument("--report", help="write the report JSON here")
    ev.add_argument("--match", choices=["exact", "approximate"], default="exact")
    ev.add_argument("--jobs", type=int, default=int(_env("JOBS", "1")))

    ex = sub.add_parser("extract", help="run the text extraction pipeline on one query")
    ex.add_argument("query", help='a "When ..." question')
    _add_extraction(ex)

    ab = sub.add_parser("ablate", help="write an ablated copy of a KB file")
    ab.add_argument("--kb", default=_env("KB"), required=_env("KB") is None)
    ab.add_argument("--plan", required=True)
    ab.add_argument("--out", required=True)
    return parser


# --------------------------------------------------------------------- config


def _kb_backend(args):
    if bool(args.kb) == bool(args.endpoint):
        raise UsageError("give exactly one KB source: --kb or --endpoint")
    if args.endpoint:
        return EndpointKb(args.endpoint, args.kb_timeout_ms / 1000.0, args.link_threshold)
    path = Path(args.kb)
    if not path.is_file():
        raise UsageError(f"KB file not found: {path}")
    return KbStore.load(path)


def _load_corpus(path: Optional[str]) -> Optional[Corpus]:
    if path is None:
        return None
    corpus = Corpus.load(path)
    if len(corpus) == 0:
        raise UsageError(f"corpus is empty: {path}")
    return corpus


def _extraction_config(args) -> ExtractionConfig:
    timeout = getattr(args, "kb_timeout_ms", 30000) / 1000.0
    return ExtractionConfig(
        k=args.top_k,
        top_n=args.top_n,
        reranker=RemoteReranker(args.ranker_url, timeout) if args.ranker_url else None,
        reader=RemoteReader(args.rcqa_url, timeout) if args.rcqa_url else None,
    )


def _run_config(args) -> OrchestratorConfig:
    today = None
    if args.today:
        try:
            today = CalendarPoint.parse(args.today)
        except TemporalError as exc:
            raise UsageError(f"bad --today: {exc}") from exc
    mode = Mode(args.mode)
    if mode is Mode.KB_TEXT and args.corpus is None:
        raise UsageError("--mode kb-text needs --corpus")
    return OrchestratorConfig(mode, today, args.extraction_budget, getattr(args, "jobs", 1),
                              _extraction_config(args))


def _backend_from(args, source):
    if isinstance(source, KbStore):
        return LocalKb(source, args.link_threshold)
    return source


# ------------------------------------------------------------------- commands


def cmd_ask(args) -> int:
    try:
        expr = parse_lambda(args.lambda_) if args.lambda_ else parse_question(args.question)
    except (LambdaError, UnsupportedQuestion) as exc:
        raise UsageError(str(exc)) from exc
    config = _run_config(args)
    kb = _backend_from(args, _kb_backend(args))
    corpus = _load_corpus(args.corpus)
    answers, trace = Orchestrator(kb, corpus, config).answer(expr)
    if args.trace:
        Path(args.trace).write_text(trace.to_json() + "\n", encoding="utf-8")
    if trace.verdict is Verdict.UNANSWERED:
        print(f"no answer: {trace.reason}", file=sys.stderr)
        return EXIT_NO_ANSWER
    for text in answers.labels():
        print(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import AblationError, AblationPlan, MatchMode, ablate, load_dataset, run_eval

    path = Path(args.dataset)
    if not path.is_file():
        raise UsageError(f"dataset not found: {path}")
    items, errors = load_dataset(path)
    for e in errors:
        print(f"skipped: {e}", file=sys.stderr)
    if not items:
        raise UsageError(f"no loadable items in {path}")
    config = _run_config(args)
    source = _kb_backend(args)
    if args.ablation:
        if not isinstance(source, KbStore):
            raise UsageError("--ablation needs a --kb file")
        try:
            source = ablate(source, AblationPlan.load(args.ablation))
        except (AblationError, OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad ablation plan: {exc}") from exc
    report = run_eval(items, _backend_from(args, source), _load_corpus(args.corpus),
                      config.mode, config, MatchMode(args.match), args.jobs)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n",
                                     encoding="utf-8")
    print(report.table())
    return EXIT_OK


def cmd_extract(args) -> int:
    if args.corpus is None:
        raise UsageError("extract needs --corpus")
    corpus = _load_corpus(args.corpus)
    query = _text_query(args.query)
    record = ExtractionRecord(args.query)
    try:
        fact = extract_for_query(query, corpus, config=_extraction_config(args), record=record)
    except NoDateFound as exc:
        print(f"no date found: {exc}", file=sys.stderr)
        return EXIT_NO_ANSWER
    print(fact.interval)
    print(fact.source_sentence)
    return EXIT_OK


def _text_query(text: str) -> TextQuery:
    try:
        return lambda_to_query(parse_question(text))
    except (UnsupportedQuestion, UnrenderableLambda):
        if not text.startswith("When "):
            raise UsageError(f"extract expects a 'When ...?' question, got {text!r}") from None
        return TextQuery(text, QueryKind.ENTITY_BASED, QuerySource.AUX, ())


def cmd_ablate(args) -> int:
    from .evaluation import AblationError, AblationPlan, ablate

    if not Path(args.kb).is_file():
        raise UsageError(f"KB file not found: {args.kb}")
    try:
        store = ablate(KbStore.load(args.kb), AblationPlan.load(args.plan))
    except (AblationError, OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot ablate: {exc}") from exc
    Path(args.out).write_text(json.dumps(store.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {args.out}: {len(store.entities)} entities, {len(store)} facts")
    return EXIT_OK


COMMANDS = {"ask": cmd_ask, "eval": cmd_eval, "extract": cmd_extract, "ablate": cmd_ablate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, KbError, CorpusError, ServiceError) as exc:
        print(f"tqa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
