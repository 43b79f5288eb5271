from .bfs import Graph, bench_bfs, parallel_bfs, random_graph, sequential_bfs
from .common import (CSV_HEADER, DESK_SCALE, PAPER_SCALE, BenchConfig, BenchCorrectnessError,
                     BenchResult, Sample, emit_csv)
from .counters import bench_counter_atomic, bench_counter_hybrid, bench_counter_overshoot
from .queue import bench_queue

BENCHES = {
    "counter-overshoot": bench_counter_overshoot,
    "counter-atomic": bench_counter_atomic,
    "counter-hybrid": bench_counter_hybrid,
    "queue": bench_queue,
    "bfs": bench_bfs,
}
