"""Counter sweep: weak-mode throughput/overshoot, atomic and hybrid counters.

    python scripts/counter_sweep.py --threads 1,2,4,8 --merge-freq 1,64,4096 --csv counter.csv
"""
import argparse

from glv.bench import (DESK_SCALE, PAPER_SCALE, BenchConfig, bench_counter_atomic,
                       bench_counter_hybrid, bench_counter_overshoot, emit_csv)


def ints(text):
    return [int(float(x)) for x in text.split(",")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--threads", type=ints, default=[1, 2, 4, 8])
    ap.add_argument("--merge-freq", type=ints, default=[1, 64, 4096])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()
    target = (PAPER_SCALE if args.paper_scale else DESK_SCALE)["target"]

    results = []
    for t in args.threads:
        results.append(bench_counter_atomic(BenchConfig("counter-atomic", t, 1, target,
                                                        args.reps)))
        for m in args.merge_freq:
            for fn in (bench_counter_overshoot, bench_counter_hybrid):
                r = fn(BenchConfig(fn.__name__, t, m, target, args.reps))
                results.append(r)
    for r in results:
        print(f"{r.label:>18} t={r.config.threads:<3} m={r.config.merge_frequency:<5} "
              f"{r.throughput / 1e6:10.1f} Mops/s  overshoot={r.overshoot}")
    if args.csv:
        emit_csv(results, args.csv)


if __name__ == "__main__":
    main()
