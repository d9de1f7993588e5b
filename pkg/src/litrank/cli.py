"""Operator command line: ingest, index, query, eval, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import BackendUnavailableError, CorpusError, LitrankError, ProtocolError
from .corpus import CorpusStore, Paragraph, SplitterConfig, ingest, pack_block
from .engine import Engine, EngineSettings, QueryRequest
from .evaluate import (build_ranking_cases, evaluate_ranking,
                       format_report_table, load_dataset, rouge_report)
from .evidence import (ROLE_DOMAIN_EXPERT, ROLE_GENERALIST, BackendDescriptor,
                       gather_evidence, make_backend)
from .index import Bm25Config, build_index
from .rank import ScoringConfig, rerank
from .summarize import LeadingSentencesSummarizer, Variant, abstractive_summary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="litrank",
                     description="Query-focused literature mining engine")
    sub = parser.add_subparsers(dest="command")

    p_ingest = sub.add_parser("ingest", help="ingest a document source")
    p_ingest.add_argument("--src", required=True, help="JSON dir or JSONL file")
    p_ingest.add_argument("--out", required=True, help="corpus store directory")
    p_ingest.add_argument("--max-words", type=int, default=400)
    p_ingest.add_argument("--json", action="store_true")

    p_index = sub.add_parser("index", help="build a search index")
    p_index.add_argument("--corpus", required=True)
    p_index.add_argument("--out", required=True)
    p_index.add_argument("--bm25-k1", type=float, default=0.9)
    p_index.add_argument("--bm25-b", type=float, default=0.75)
    p_index.add_argument("--field-weights", default="body=1.0,title=0.5,abstract=0.5")
    p_index.add_argument("--json", action="store_true")

    p_query = sub.add_parser("query", help="run the pipeline for one or more sub-queries")
    p_query.add_argument("--index", required=True)
    p_query.add_argument("--q", action="append", required=True,
                         help="sub-query; repeatable")
    p_query.add_argument("--top-n", type=int, default=None)
    p_query.add_argument("--top-k", type=int, default=None)
    p_query.add_argument("--variant", default=None)
    p_query.add_argument("--include", default="snippets,extractive,abstractive")
    p_query.add_argument("--budget", type=int, default=None)
    p_query.add_argument("--config", default=None)
    p_query.add_argument("--json", action="store_true")
    _add_scoring_flags(p_query)

    p_eval = sub.add_parser("eval", help="run the evaluation harness")
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--format", required=True,
                        choices=["covidqa_like", "debatepedia_like", "duc_like"])
    p_eval.add_argument("--metrics", default="ranking",
                        help="comma list from {ranking, rouge}")
    p_eval.add_argument("--max-words", type=int, default=100,
                        help="paragraph split size for the ranking protocol")
    p_eval.add_argument("--variant", default="CAQ")
    p_eval.add_argument("--lenient", action="store_true",
                        help="exit 0 even when records were rejected")
    p_eval.add_argument("--json", action="store_true")
    _add_scoring_flags(p_eval)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--index", required=True)
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--config", default=None)
    p_serve.add_argument("--ui-dir", default=None)
    return parser


def _add_scoring_flags(parser) -> None:
    parser.add_argument("--lambda1", type=float, default=None)
    parser.add_argument("--lambda2", type=float, default=None)
    parser.add_argument("--lc", type=int, default=None)
    parser.add_argument("--alpha", type=float, default=None)


def _scoring_from_args(args, base: ScoringConfig) -> ScoringConfig:
    return ScoringConfig(
        lambda1=base.lambda1 if args.lambda1 is None else args.lambda1,
        lambda2=base.lambda2 if args.lambda2 is None else args.lambda2,
        length_cutoff=base.length_cutoff if args.lc is None else args.lc,
        alpha=base.alpha if args.alpha is None else args.alpha,
        tie_break=base.tie_break,
    )


def _parse_field_weights(spec: str) -> dict[str, float]:
    weights = {}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, value = item.partition("=")
        if not value:
            raise _UsageError(f"bad --field-weights entry: {item!r}")
        try:
            weights[name.strip()] = float(value)
        except ValueError:
            raise _UsageError(f"bad --field-weights value: {item!r}") from None
    return weights


def _cmd_ingest(args) -> int:
    manifest = ingest(args.src, args.out, SplitterConfig(max_words=args.max_words))
    if args.json:
        print(json.dumps(manifest.to_dict(), indent=2))
    else:
        print(f"ingested {manifest.n_documents} documents, "
              f"{manifest.n_paragraphs} paragraphs "
              f"({manifest.n_rejected} rejected) -> {args.out}")
    return EXIT_OK


def _cmd_index(args) -> int:
    config = Bm25Config(k1=args.bm25_k1, b=args.bm25_b,
                        field_weights=_parse_field_weights(args.field_weights))
    store = CorpusStore(args.corpus)
    index = build_index(store, config)
    index.save(args.out)
    stats = index.stats()
    if args.json:
        print(json.dumps(stats.to_dict(), indent=2))
    else:
        print(f"indexed {stats.n_paragraphs} paragraphs -> {args.out}")
    return EXIT_OK


def _cmd_query(args) -> int:
    settings = EngineSettings.load(args.config)
    settings.scoring = _scoring_from_args(args, settings.scoring)
    engine = Engine.open(args.index, settings)
    request = QueryRequest(
        queries=args.q,
        top_n=settings.top_n if args.top_n is None else args.top_n,
        top_k=settings.top_k if args.top_k is None else args.top_k,
        variant=settings.variant if args.variant is None else args.variant,
        include=tuple(f.strip() for f in args.include.split(",") if f.strip()),
        budget=args.budget,
    )
    try:
        response = engine.run(request)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    if args.json:
        print(json.dumps(response))
        return EXIT_OK
    for result in response["results"]:
        print(f"# {result['query']}")
        for snippet in result.get("snippets", [])[:5]:
            print(f"  [{snippet['rank']}] {snippet['para_id']} "
                  f"score={snippet['rerank_score']:.4f}")
            for start, end in snippet["highlights"]:
                print(f"      … {snippet['text'][start:end]}")
        summary = result.get("summary")
        if summary and summary["extractive"]:
            print("  extractive:")
            for sent in summary["extractive"]:
                print(f"    - ({sent['similarity']:.3f}) {sent['text']}")
        if summary and summary["abstractive"]:
            print(f"  abstractive: {summary['abstractive']['text']}")
        for note in result["notes"]:
            print(f"  note: {note}")
    return EXIT_OK


def _qa_ensemble() -> dict:
    return {
        role: make_backend(BackendDescriptor(role, "builtin"))
        for role in (ROLE_GENERALIST, ROLE_DOMAIN_EXPERT)
    }


def _cmd_eval(args) -> int:
    metrics = {m.strip() for m in args.metrics.split(",") if m.strip()}
    unknown = metrics - {"ranking", "rouge"}
    if unknown or not metrics:
        raise _UsageError(f"unknown metrics: {sorted(unknown)}")
    loaded = load_dataset(args.dataset, args.format)
    report: dict = {"dataset": str(args.dataset), "format": args.format,
                    "n_records": len(loaded.records),
                    "n_rejected": loaded.n_rejected,
                    "rejected": loaded.rejected}
    scoring = _scoring_from_args(args, ScoringConfig())
    if "ranking" in metrics:
        if args.format != "covidqa_like":
            raise _UsageError("ranking metrics need --format covidqa_like")
        cases = build_ranking_cases(loaded.records, _qa_ensemble(), scoring,
                                    max_words=args.max_words)
        report["ranking"] = evaluate_ranking(cases, args.max_words).to_dict()
    if "rouge" in metrics:
        if args.format == "covidqa_like":
            raise _UsageError("rouge metrics need a summarization format")
        report["rouge"] = _rouge_eval(loaded.records, scoring, args)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_report_table(
            {k: v for k, v in report.items() if k not in ("rejected",)},
            title=f"eval {args.format}"))
    if loaded.n_rejected and not args.lenient:
        return EXIT_DATA
    return EXIT_OK


def _rouge_eval(records, scoring: ScoringConfig, args) -> dict:
    """Summarize each record with builtin backends and average ROUGE."""
    backends = _qa_ensemble()
    summarizer = LeadingSentencesSummarizer()
    totals: dict[str, dict[str, float]] = {}
    count = 0
    for record in records:
        paragraphs: list[Paragraph] = []
        for d_idx, doc in enumerate(record.documents):
            for j, (text, offsets) in enumerate(pack_block(doc["text"], 400)):
                paragraphs.append(Paragraph(
                    para_id=f"{record.record_id}:{d_idx:03d}:{j:03d}",
                    doc_id=doc["doc_id"], text=text,
                    word_count=len(text.split()), sentences=offsets))
        if not paragraphs:
            continue
        candidates = []
        for paragraph in paragraphs:
            ev, _ = gather_evidence(record.query, paragraph, backends)
            candidates.append((paragraph, ev))
        snippets = rerank(candidates, record.query, scoring)
        by_id = {p.para_id: p for p in paragraphs}
        ranked = [(by_id[s.para_id], [sp.text for sp in s.evidence.spans])
                  for s in snippets]
        summary = abstractive_summary(
            record.query, ranked, summarizer, variant=Variant(args.variant),
            budget=record.budget)
        scores = rouge_report(summary.text, record.references).to_dict()
        for metric, parts in scores.items():
            bucket = totals.setdefault(metric,
                                       {"recall": 0.0, "precision": 0.0, "f1": 0.0})
            for name in bucket:
                bucket[name] += parts[name]
        count += 1
    if count == 0:
        raise CorpusError("no usable records for rouge evaluation")
    return {metric: {name: value / count for name, value in bucket.items()}
            for metric, bucket in totals.items()}


def _cmd_serve(args) -> int:
    from .service import serve

    settings = EngineSettings.load(args.config)
    if args.ui_dir:
        settings.ui_dir = args.ui_dir
    engine = Engine.open(args.index, settings)
    serve(engine, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        handler = {
            "ingest": _cmd_ingest,
            "index": _cmd_index,
            "query": _cmd_query,
            "eval": _cmd_eval,
            "serve": _cmd_serve,
        }[args.command]
        return handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BackendUnavailableError, ProtocolError) as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (CorpusError, LitrankError, OSError, KeyError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
