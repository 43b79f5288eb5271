"""Command line: ``glv bench ...`` and ``glv check ...``.

Setting ``GLV_RECORD=<path>`` makes ``bench`` first run a small recorded
execution of the benchmarked type, write its trace to ``<path>`` and check
it; an inconsistent trace aborts the benchmark with exit code 1.
"""
from __future__ import annotations

import argparse
import itertools
import os
import sys

from .consistency import SPECS, SearchBudgetExceeded, check
from .history import MalformedHistory, read_trace, write_trace

EXIT_CONSISTENT, EXIT_INCONSISTENT, EXIT_BUDGET = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(float(x)) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _size(text: str) -> int:
    try:
        return int(float(text))  # accepts 5e5
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    from .bench import BENCHES
    from .queues import BUILDS

    p = argparse.ArgumentParser(prog="glv", description="Mergeable data types: benchmarks "
                                "and consistency checking.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a benchmark and emit CSV")
    b.add_argument("name", choices=sorted(BENCHES))
    b.add_argument("--threads", type=_int_list, default=[1],
                   help="thread count, or a comma-separated sweep")
    b.add_argument("--merge-freq", type=_int_list, default=[1],
                   help="merge frequency, or a comma-separated sweep")
    b.add_argument("--target", type=_size, default=None,
                   help="increments (counter), operations (queue) or vertices (bfs)")
    b.add_argument("--edges", type=_size, default=None, help="edge count (bfs)")
    b.add_argument("--build", default="ML",
                   help=f"queue build(s), comma-separated, from {sorted(BUILDS)}")
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv", default=None, help="output path (default: stdout)")
    b.add_argument("--paper-scale", action="store_true",
                   help="use the full-size workloads instead of the desk defaults")
    b.add_argument("--pin", action="store_true",
                   help="pin the two halves of the workers to the two halves of the CPUs")
    b.add_argument("--no-warmup", action="store_true",
                   help="keep the first repetition instead of discarding it")

    c = sub.add_parser("check", help="check a recorded trace for GLConsistency")
    c.add_argument("--trace", required=True)
    c.add_argument("--type", required=True, choices=sorted(SPECS))
    c.add_argument("--max-global", type=int, default=12)
    return p


def _default_size(name: str, scale: dict) -> int:
    if name.startswith("counter"):
        return scale["target"]
    if name == "queue":
        return scale["queue_ops"]
    return scale["vertices"]


def _record(name: str, builds: list[str], threads: int, seed: int, path: str) -> int:
    from .bench.recorded import random_counter_history, random_queue_history

    threads = max(2, min(threads, 4))
    if name.startswith("counter"):
        events, type_ = random_counter_history(threads, seed), "counter"
    else:
        events, type_ = random_queue_history(builds[0], threads, seed), "queue"
    write_trace(events, path)
    verdict = check(events, type_)
    if not verdict:
        print(f"recorded run inconsistent: {verdict.violation.describe()}", file=sys.stderr)
        return EXIT_INCONSISTENT
    print(f"recorded {len(events)} events to {path}: consistent", file=sys.stderr)
    return EXIT_CONSISTENT


def cmd_bench(args) -> int:
    from .bench import BENCHES, DESK_SCALE, PAPER_SCALE, BenchConfig, emit_csv, random_graph
    from .queues import BUILDS

    scale = PAPER_SCALE if args.paper_scale else DESK_SCALE
    target = args.target or _default_size(args.name, scale)
    edges = args.edges or scale["edges"]
    builds = [x.strip() for x in args.build.split(",")]
    unknown = [x for x in builds if x not in BUILDS]
    if unknown:
        print(f"unknown build(s) {unknown}; expected {sorted(BUILDS)}", file=sys.stderr)
        return 2

    record_path = os.environ.get("GLV_RECORD")
    if record_path:
        status = _record(args.name, builds, max(args.threads), args.seed, record_path)
        if status != EXIT_CONSISTENT:
            return status

    uses_build = args.name in ("queue", "bfs")
    graph = random_graph(target, edges, args.seed) if args.name == "bfs" else None
    results = []
    for threads, m, build in itertools.product(args.threads, args.merge_freq,
                                               builds if uses_build else [builds[0]]):
        cfg = BenchConfig(args.name, threads=threads, merge_frequency=m, target=target,
                          repetitions=args.reps, seed=args.seed, build=build, edges=edges,
                          pin=args.pin, warmup=not args.no_warmup)
        r = BENCHES[args.name](cfg, graph) if graph is not None else BENCHES[args.name](cfg)
        results.append(r)
        extra = ""
        if r.overshoot is not None:
            extra = f" overshoot={r.overshoot}"
        if r.speedup is not None:
            extra = f" speedup={r.speedup:.3f}"
        print(f"{r.label:>20} threads={threads:<3} m={m:<6} "
              f"throughput={r.throughput:.4g}/s elapsed={r.elapsed:.4f}s{extra}",
              file=sys.stderr)
    emit_csv(results, args.csv)
    return 0


def cmd_check(args) -> int:
    try:
        events = read_trace(args.trace)
        verdict = check(events, args.type, max_global=args.max_global)
    except SearchBudgetExceeded as exc:
        print(f"search budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (MalformedHistory, OSError) as exc:
        print(f"cannot check {args.trace}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if verdict:
        print(f"consistent ({len(events)} events, {verdict.explored} search nodes)")
        return EXIT_CONSISTENT
    print("inconsistent")
    print(verdict.violation.describe())
    return EXIT_INCONSISTENT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bench":
        return cmd_bench(args)
    return cmd_check(args)


if __name__ == "__main__":
    sys.exit(main())
