"""Command-line front door: ingest sources, run queries, serve, benchmark.

Exit codes: 0 success, 1 clones with license conflicts were found (a
greppable CI signal), 2 operational error.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import tempfile
import threading
from pathlib import Path

from .bench import run_bench
from .cache import CacheStore, get_or_build
from .engine import DetectionConfig, detect_clones
from .ingest.directory import IngestConfig, ingest_directory
from .ingest.stackexchange import ingest_stackexchange_dump
from .licensing.matrix import (
    VERDICT_CONFLICT,
    default_matrix,
    load_matrix,
)
from .licensing.rules import DEFAULT_RULES, load_rules
from .model import (
    CloneAuditError,
    TruncatedDumpError,
    read_corpus,
    write_corpus,
)
from .report import build_report, render_report, sample_pairs
from .service.apprentice import ApprenticeService
from .service.manager import ManagerService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFLICTS = 1
EXIT_ERROR = 2

SE_DEFAULT_LICENSE = "CC-BY-SA-3.0"


def _add_detection_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta", type=float, default=0.8,
                        help="overlap threshold in (0, 1] (default 0.8)")
    parser.add_argument("--min-tokens", type=int, default=23,
                        help="smallest block size compared (default 23)")
    parser.add_argument("--include-self-pairs", action="store_true",
                        help="report a block as a clone of itself")
    parser.add_argument("--denominator", choices=["max", "query"], default="max",
                        help="which block size the threshold is relative to")


def _add_license_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rules", help="license rule set JSON file")
    parser.add_argument("--matrix", help="license compatibility matrix JSON file")
    parser.add_argument("--default-license",
                        help="corpus-wide default license id (e.g. CC-BY-SA-3.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloneaudit",
        description="Detect code clones and license conflicts between corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="turn a source into a corpus file")
    p_ingest.add_argument("source", help="directory, zip/tar archive, or Posts.xml")
    p_ingest.add_argument("--out", required=True, help="corpus JSON-lines output path")
    p_ingest.add_argument("--stackexchange", action="store_true",
                          help="treat source as a StackExchange Posts.xml dump")
    p_ingest.add_argument("--tag", default="",
                          help="keep only posts with this tag (StackExchange mode)")
    p_ingest.add_argument("--granularity", default="file",
                          help="comma list of file,module,function (default file)")
    p_ingest.add_argument("--min-tokens", type=int, default=1,
                          help="drop blocks with fewer tokens (default 1)")
    p_ingest.add_argument("--extensions", default=".py",
                          help="comma list of source extensions (default .py)")
    p_ingest.add_argument("--corpus-id", help="corpus id (default: source name)")
    _add_license_flags(p_ingest)

    p_query = sub.add_parser("query", help="detect clones between two corpus files")
    p_query.add_argument("--corpus", required=True, help="corpus JSON-lines file")
    p_query.add_argument("--query", required=True,
                         help="query JSON-lines file (may equal --corpus)")
    p_query.add_argument("--store", help="index cache directory (default: temp)")
    p_query.add_argument("--report", help="directory to write report.json/report.html")
    p_query.add_argument("--sample", type=int,
                         help="print a uniform sample of N pairs for manual review")
    p_query.add_argument("--size-class", choices=["small", "medium", "large"],
                         help="restrict --sample to one size class")
    p_query.add_argument("--seed", type=int,
                         help="sampling seed; required with --sample (no hidden entropy)")
    _add_detection_flags(p_query)
    _add_license_flags(p_query)

    p_serve = sub.add_parser("serve", help="run an apprentice or manager service")
    mode = p_serve.add_mutually_exclusive_group(required=True)
    mode.add_argument("--apprentice", action="store_true")
    mode.add_argument("--manager", action="store_true")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=0,
                         help="listen port (default: ephemeral)")
    p_serve.add_argument("--store", help="apprentice index cache directory")
    p_serve.add_argument("--data-dir", help="manager data directory")
    _add_license_flags(p_serve)

    p_bench = sub.add_parser("bench", help="time cold vs warm query runs")
    p_bench.add_argument("--corpus", required=True,
                         help="corpus file or raw source directory/archive")
    p_bench.add_argument("--query", required=True, help="query corpus file")
    p_bench.add_argument("--runs", type=int, default=5)
    p_bench.add_argument("--store", help="cache directory (default: temp)")
    p_bench.add_argument("--granularity", default="file")
    p_bench.add_argument("--extensions", default=".py")
    _add_detection_flags(p_bench)

    return parser


def _split_csv(value: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in value.split(",") if s.strip())


def _load_rules_arg(args) -> list:
    if getattr(args, "rules", None):
        return load_rules(args.rules)
    return list(DEFAULT_RULES)


def _load_matrix_arg(args, rules):
    known = frozenset(r.license_id for r in rules)
    if getattr(args, "matrix", None):
        return load_matrix(args.matrix, extra_known_ids=known)
    return default_matrix()


def _detection_config(args) -> DetectionConfig:
    return DetectionConfig(
        theta=args.theta,
        min_tokens=args.min_tokens,
        exclude_self_pairs=not args.include_self_pairs,
        denominator=args.denominator,
    )


def _run_config_dict(args, detection: DetectionConfig | None = None) -> dict:
    """The full effective configuration, echoed into every output."""
    out = {}
    for key in ("theta", "min_tokens", "granularity", "extensions", "tag",
                "rules", "matrix", "default_license", "store", "seed", "runs"):
        if hasattr(args, key):
            out[key] = getattr(args, key)
    if detection is not None:
        out.update(detection.to_dict())
    return out


def cmd_ingest(args) -> int:
    rules = _load_rules_arg(args)
    config = IngestConfig(
        corpus_id=args.corpus_id,
        extensions=_split_csv(args.extensions),
        granularities=_split_csv(args.granularity),
        min_tokens=args.min_tokens,
        default_license=args.default_license
        or (SE_DEFAULT_LICENSE if args.stackexchange else None),
        rules=rules,
    )
    out_path = Path(args.out)
    try:
        if args.stackexchange:
            corpus = ingest_stackexchange_dump(args.source, args.tag, config)
        else:
            corpus = ingest_directory(args.source, config)
    except TruncatedDumpError as exc:
        # Flush rows that completed before the truncation point, then fail.
        write_corpus(exc.partial_corpus, out_path)
        print(f"error: {exc} (partial corpus written to {out_path})", file=sys.stderr)
        return EXIT_ERROR

    write_corpus(corpus, out_path)
    meta = {
        "corpus_id": corpus.corpus_id,
        "content_hash": corpus.content_hash,
        "created_at": corpus.created_at,
        "block_count": len(corpus.blocks),
        "run_config": _run_config_dict(args),
        "ingest_log": corpus.ingest_log.to_dict() if corpus.ingest_log else None,
    }
    out_path.with_suffix(out_path.suffix + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8"
    )
    print(f"wrote {len(corpus.blocks)} blocks to {out_path}", file=sys.stderr)
    return EXIT_OK


def cmd_query(args) -> int:
    if args.sample is not None and args.seed is None:
        print("error: --sample requires an explicit --seed", file=sys.stderr)
        return EXIT_ERROR
    detection = _detection_config(args)
    rules = _load_rules_arg(args)
    matrix = _load_matrix_arg(args, rules)

    corpus = read_corpus(args.corpus)
    query = corpus if args.query == args.corpus else read_corpus(args.query)

    if args.store:
        store = CacheStore(Path(args.store))
        index = get_or_build(corpus, detection, store)
    else:
        with tempfile.TemporaryDirectory(prefix="cloneaudit-store-") as tmp:
            index = get_or_build(corpus, detection, CacheStore(Path(tmp)))

    pairs = detect_clones(query.blocks, index, detection, matrix=matrix)
    pairs.sort(key=lambda p: p.key)

    run_config = _run_config_dict(args, detection)
    print(json.dumps({"run_config": run_config}, sort_keys=True))
    for pair in pairs:
        print(json.dumps(pair.to_record(), sort_keys=True))

    report = build_report(
        query_set_id=query.corpus_id,
        pairs=pairs,
        config=run_config,
        apprentices=[{
            "apprentice_id": "local",
            "base_url": None,
            "corpus_id": corpus.corpus_id,
            "corpus_hash": corpus.content_hash,
        }],
    )
    print()
    print(f"{'License':<28}{'Clone Pairs':>14}  {'Percent of Clones':>18}")
    for label, count, percent in report.stats.rows():
        print(f"{label:<28}{count:>14}  {percent:>18}")

    if args.sample is not None:
        sampled, short = sample_pairs(
            pairs, args.sample, size_class=args.size_class, seed=args.seed
        )
        print()
        print(f"sample of {len(sampled)}"
              + (" (population exhausted)" if short else "")
              + f" [seed {args.seed}]:")
        for pair in sampled:
            print(json.dumps(pair.to_record(), sort_keys=True))

    if args.report:
        report_dir = Path(args.report)
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "report.json").write_text(
            render_report(report, "json"), encoding="utf-8"
        )
        (report_dir / "report.html").write_text(
            render_report(report, "html"), encoding="utf-8"
        )
        print(f"report written to {report_dir}", file=sys.stderr)

    conflicts = sum(1 for p in pairs if p.verdict == VERDICT_CONFLICT)
    return EXIT_CONFLICTS if conflicts else EXIT_OK


def cmd_serve(args) -> int:
    rules = _load_rules_arg(args)
    matrix = _load_matrix_arg(args, rules)
    try:
        # The listening socket is bound at construction time.
        if args.apprentice:
            store = args.store or tempfile.mkdtemp(prefix="cloneaudit-store-")
            service = ApprenticeService(
                store, matrix=matrix, host=args.host, port=args.port
            )
        else:
            data_dir = args.data_dir or tempfile.mkdtemp(prefix="cloneaudit-manager-")
            service = ManagerService(data_dir, host=args.host, port=args.port)
        service.start()
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    stop = threading.Event()

    def handle_signal(signum, frame):
        logger.info("received signal %d, shutting down", signum)
        stop.set()

    signal.signal(signal.SIGTERM, handle_signal)
    signal.signal(signal.SIGINT, handle_signal)

    print(f"listening on {service.base_url}", flush=True)
    stop.wait()
    service.stop()
    return EXIT_OK


def cmd_bench(args) -> int:
    detection = _detection_config(args)
    ingest_config = IngestConfig(
        extensions=_split_csv(args.extensions),
        granularities=_split_csv(args.granularity),
        min_tokens=1,
    )
    store_root = Path(args.store) if args.store else Path(
        tempfile.mkdtemp(prefix="cloneaudit-bench-")
    )
    result = run_bench(
        args.corpus, args.query, detection, ingest_config, store_root, runs=args.runs
    )
    print(json.dumps({"run_config": _run_config_dict(args, detection)}, sort_keys=True))
    for line in result.summary_lines():
        print(line)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "ingest": cmd_ingest,
        "query": cmd_query,
        "serve": cmd_serve,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except CloneAuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
