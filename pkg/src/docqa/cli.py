"""Command line entry points; thin wrappers over the library and service."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bootstrap import build_runtime_from_config
from .config import AppConfig, load_config
from .contenttools import coverage_test, lint_topic
from .corpus import CorpusError, load_corpus, load_topic_file
from .evalstore import EvalStore, EvalStoreError, export_datasets, funnel_report, usage_stats
from .generate import StubGenerativeClient
from .regression import CaseParseError, load_cases, run_regression, write_report
from .retrieve import build_index


def _load_app_config(args) -> AppConfig:
    config = load_config(args.config) if getattr(args, "config", None) else AppConfig()
    if getattr(args, "corpus", None):
        config.corpus_root = args.corpus
    return config


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_app_config(args)
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


def cmd_ingest(args) -> int:
    try:
        corpus = load_corpus(args.corpus)
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    index = build_index(corpus)
    print(f"topics: {len(corpus)}")
    print(f"terms: {len(index.postings)}")
    if corpus.failures:
        print(f"failures: {len(corpus.failures)}")
        for path, message in sorted(corpus.failures.items()):
            print(f"  {path}: {message}")
    return 0


def cmd_regress(args) -> int:
    config = _load_app_config(args)
    try:
        cases = load_cases(args.cases)
    except CaseParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    runtime = build_runtime_from_config(config)
    report = run_regression(cases, runtime, config_hash=config.snapshot_hash(), parallelism=args.parallelism)
    out = args.out or "regression-report.json"
    write_report(report, out)
    for result in report.cases:
        status = "pass" if result.passed else "FAIL"
        print(f"[{status}] case {result.case_index}: hit={result.retrieval_hit} f1={result.token_f1:.3f} {result.question}")
    print(
        f"hit_rate={report.hit_rate:.3f} bleu={report.mean_bleu:.3f} "
        f"rouge_l={report.mean_rouge_l:.3f} report={out}"
    )
    return 1 if report.failures else 0


def cmd_lint(args) -> int:
    try:
        topic = load_topic_file(Path(args.path))
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    findings = lint_topic(topic)
    if args.json:
        print(json.dumps([f.__dict__ for f in findings], indent=2))
    else:
        for f in findings:
            print(f"{f.severity}: [{f.guideline}] block {f.block_index}: {f.message}")
        if not findings:
            print("clean: no findings")
    return 1 if any(f.severity == "error" for f in findings) else 0


def cmd_coverage(args) -> int:
    try:
        topic = load_topic_file(Path(args.topic))
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    questions = [q for q in Path(args.questions).read_text(encoding="utf-8").splitlines() if q.strip()]
    report = coverage_test(topic, questions, StubGenerativeClient(), threshold=args.threshold)
    if args.json:
        print(
            json.dumps(
                {
                    "coverage": report.coverage,
                    "generated_questions": list(report.generated_questions),
                    "matches": [m.__dict__ for m in report.matches],
                    "unmatched_real": list(report.unmatched_real),
                },
                indent=2,
            )
        )
    else:
        print(f"coverage: {report.coverage:.2f} ({len(report.matches)}/{len(questions)} matched)")
        for real in report.unmatched_real:
            print(f"unmatched: {real}")
    return 0 if report.coverage >= args.min_coverage else 1


def cmd_report(args) -> int:
    store = EvalStore(args.data_dir)
    records = store.all_records()
    payload: dict = {"records": len(records)}
    if records:
        report = funnel_report(records, period=args.period)
        payload["funnel"] = {
            "stages": [
                {"name": s.name, "count": s.count, "eligible": s.eligible, "rate": s.rate}
                for s in report.stages
            ],
            "content_gap_rate": report.content_gap_rate,
            "search_failure_rate": report.search_failure_rate,
        }
    if args.log:
        lines = [
            json.loads(line)
            for line in Path(args.log).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        stats = usage_stats(lines)
        payload["usage"] = {
            "nl_question_share": stats.nl_question_share,
            "feedback_distribution": stats.feedback_distribution,
            "feedback_rate": stats.feedback_rate,
        }
    out = args.out or "eval-report.json"
    Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    print(f"report written: {out}")
    return 0


def cmd_export(args) -> int:
    store = EvalStore(args.data_dir)
    try:
        result = export_datasets(store.all_records(), args.kind, args.out)
    except EvalStoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{result.kind}: {result.rows} rows -> {result.path} ({result.excluded} excluded)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="docqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--corpus", help="override corpus root")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ingest", help="load a corpus and report counts")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("regress", help="run a regression case batch")
    p.add_argument("--cases", required=True)
    p.add_argument("--corpus")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--parallelism", type=int, default=4)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("lint", help="lint a topic against the writing guidelines")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("coverage", help="test a draft topic against real questions")
    p.add_argument("topic")
    p.add_argument("--questions", required=True)
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--min-coverage", type=float, default=0.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("report", help="write funnel/usage reports from eval data")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--log")
    p.add_argument("--period", default="")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export", help="export datasets from eval records")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--kind", choices=("triplets", "classifier-training", "term-dictionary"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
