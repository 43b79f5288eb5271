"""Parallel BFS speedup against a sequential BFS for every queue build.

    python scripts/bfs_speedup.py --threads 1,2,4,8 --csv bfs.csv
"""
import argparse

from glv.bench import DESK_SCALE, PAPER_SCALE, BenchConfig, bench_bfs, emit_csv, random_graph


def ints(text):
    return [int(float(x)) for x in text.split(",")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--threads", type=ints, default=[1, 2, 4, 8])
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()
    scale = PAPER_SCALE if args.paper_scale else DESK_SCALE
    g = random_graph(scale["vertices"], scale["edges"], args.seed)

    results = []
    for t in args.threads:
        for build in ("LL", "LLF", "ML", "MLF"):
            cfg = BenchConfig("bfs", t, 1, g.n, args.reps, args.seed, build=build,
                              edges=g.m)
            r = bench_bfs(cfg, g)
            results.append(r)
            print(f"{r.label:>8} t={t:<3} {r.elapsed:8.3f} s  speedup={r.speedup:.3f}")
    if args.csv:
        emit_csv(results, args.csv)


if __name__ == "__main__":
    main()
