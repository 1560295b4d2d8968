"""Command-line entry points: corpus tools, study runs, metrics, replay, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import EngineConfig, load_config
from .corpus import (
    FeedSpec,
    generate_biased_feed,
    load_corpus,
    synthesize_corpus,
    write_corpus,
)
from .event_log import load_stream
from .harness import Durations, export_results, run_study
from .metrics import compute_session_metrics
from .session import replay_session


def _engine_config(args) -> EngineConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return EngineConfig()


def _corpus_from_args(args):
    if getattr(args, "corpus", None):
        return load_corpus(args.corpus)
    return synthesize_corpus(
        n_items=getattr(args, "corpus_size", 320),
        seed=getattr(args, "corpus_seed", 11),
    )


def _cmd_synth_corpus(args) -> int:
    corpus = synthesize_corpus(n_items=args.n, seed=args.seed)
    write_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} items across {len(corpus.categories)} categories to {args.out}")
    return 0


def _cmd_gen_feed(args) -> int:
    corpus = _corpus_from_args(args)
    spec = FeedSpec(
        dominant_categories=tuple(args.dominant.split(",")),
        concentration=args.concentration,
        length=args.length,
    )
    items = generate_biased_feed(corpus, spec, args.seed)
    counts: dict = {}
    for item in items:
        counts[item.category] = counts.get(item.category, 0) + 1
    print(json.dumps({
        "spec": spec.to_dict(),
        "composition": dict(sorted(counts.items())),
        "items": [item.to_dict() for item in items],
    }, indent=2))
    return 0


def _cmd_run_study(args) -> int:
    durations = Durations(
        warm_up_ms=args.warmup_min * 60000,
        exploration_ms=args.explore_min * 60000,
    )
    output = run_study(
        args.n,
        master_seed=args.seed,
        out_dir=args.out,
        corpus=_corpus_from_args(args),
        config=_engine_config(args),
        durations=durations,
    )
    print(output["table"])
    if args.out:
        print(f"\nlogs and results written to {args.out}")
    return 0


def _print_metrics_record(metrics) -> None:
    record = metrics.to_dict()
    print(json.dumps(record, indent=2, sort_keys=True))
    width = max(len(k) for k in record)
    print()
    for key in sorted(record):
        print(f"{key.ljust(width)}  {record[key]}")


def _cmd_metrics(args) -> int:
    config = _engine_config(args)
    if args.batch:
        paths = sorted(Path(args.batch).glob("*.jsonl"))
        if not paths:
            print(f"no .jsonl logs under {args.batch}", file=sys.stderr)
            return 1
        all_metrics = []
        for path in paths:
            stream = load_stream(path)
            all_metrics.append(compute_session_metrics(stream, config))
        print(export_results(all_metrics)["table"])
        return 0
    stream = load_stream(args.logfile)
    _print_metrics_record(compute_session_metrics(stream, config))
    return 0


def _cmd_replay(args) -> int:
    stream = load_stream(args.logfile)
    corpus = _corpus_from_args(args)
    runtime = replay_session(stream, corpus)
    original_metrics = compute_session_metrics(stream).to_dict()
    replayed_metrics = runtime.metrics()
    expected_composition = dict(stream.header.initial_composition)
    for event in stream.events:
        if event.kind == "composition_change":
            expected_composition = event.payload.get(
                "composition", expected_composition
            )
    composition_ok = runtime.feed.composition().to_dict() == expected_composition
    replayed_events = [e.to_dict() for e in runtime.stream.events]
    original_events = [e.to_dict() for e in stream.events]
    events_ok = replayed_events == original_events
    metrics_ok = original_metrics == replayed_metrics
    print(json.dumps({
        "events_match": events_ok,
        "metrics_match": metrics_ok,
        "composition_match": composition_ok,
        "event_count": len(original_events),
        "final_composition": runtime.feed.composition().to_dict(),
    }, indent=2, sort_keys=True))
    return 0 if (events_ok and metrics_ok and composition_ok) else 1


def _cmd_serve(args) -> int:
    from .service import main as serve_main

    serve_main(host=args.host, port=args.port, config=_engine_config(args))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feedlab",
        description="Feed exploration engine, study harness, and service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-corpus", help="write a synthetic content corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=320)
    p.add_argument("--seed", type=int, default=11)
    p.set_defaults(func=_cmd_synth_corpus)

    p = sub.add_parser("gen-feed", help="draw a biased feed and print it")
    p.add_argument("--corpus")
    p.add_argument("--corpus-seed", type=int, default=11)
    p.add_argument("--corpus-size", type=int, default=320)
    p.add_argument("--dominant", required=True, help="comma-separated category ids")
    p.add_argument("--concentration", type=float, default=0.8)
    p.add_argument("--length", type=int, default=35)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_feed)

    p = sub.add_parser("run-study", help="run a counterbalanced simulated study")
    p.add_argument("--n", type=int, default=28)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--warmup-min", type=int, default=5)
    p.add_argument("--explore-min", type=int, default=15)
    p.add_argument("--config")
    p.add_argument("--corpus")
    p.add_argument("--corpus-seed", type=int, default=11)
    p.add_argument("--corpus-size", type=int, default=320)
    p.set_defaults(func=_cmd_run_study)

    p = sub.add_parser("metrics", help="compute session metrics from a log")
    p.add_argument("logfile", nargs="?")
    p.add_argument("--batch", help="directory of .jsonl logs")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("replay", help="re-execute a log and verify determinism")
    p.add_argument("logfile")
    p.add_argument("--corpus")
    p.add_argument("--corpus-seed", type=int, default=11)
    p.add_argument("--corpus-size", type=int, default=320)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8777)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "metrics" and not args.logfile and not args.batch:
        parser.error("metrics needs a logfile or --batch DIR")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
