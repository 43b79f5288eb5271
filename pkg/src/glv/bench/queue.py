"""Queue micro-benchmark: a fixed number of enqueues and dequeues over all builds."""
from __future__ import annotations

import threading
import time
from collections import Counter

from ..counter import pin_thread
from ..queues import make_queue
from .common import BenchConfig, BenchCorrectnessError, BenchResult, Sample


def queue_label(build: str, merge_frequency: int) -> str:
    return f"queue-{build}-{merge_frequency}" if build.startswith("M") else f"queue-{build}"


def _worker(q, tid: int, pairs: int, m: int, out: list):
    """Alternate enqueue and dequeue; mergeable builds merge after every ``m`` enqueues."""
    enqueue, dequeue, merge = q.enqueue, q.dequeue, q.merge
    got = out[tid]
    base = tid * pairs
    if not q.mergeable:
        m = pairs  # merge is a no-op; call it once
    for start in range(base, base + pairs, m):
        for v in range(start, min(start + m, base + pairs)):
            enqueue(v)
            x = dequeue()
            if x is not None:
                got.append(x)
        merge()


def verify_queue_run(pairs_per_thread: int, threads: int, taken: list, remaining: list):
    """Conservation and per-producer FIFO; raise ``BenchCorrectnessError`` on failure."""
    produced = Counter(t * pairs_per_thread + i
                       for t in range(threads) for i in range(pairs_per_thread))
    seen = Counter(remaining)
    for got in taken:
        seen.update(got)
    if seen != produced:
        lost = produced - seen
        extra = seen - produced
        raise BenchCorrectnessError(f"queue lost {sum(lost.values())} and invented "
                                    f"{sum(extra.values())} element(s)")
    for seq in taken + [remaining]:
        last = {}
        for v in seq:
            p = v // pairs_per_thread
            if v <= last.get(p, -1):
                raise BenchCorrectnessError(f"producer {p} elements out of order")
            last[p] = v


def run_queue_once(build: str, threads: int, total_ops: int, m: int, pin: bool = False):
    """One timed run; returns (elapsed seconds, operations performed)."""
    q = make_queue(build)
    pairs = max(1, total_ops // (2 * threads))
    taken = [[] for _ in range(threads)]
    gate = threading.Barrier(threads + 1)

    def body(tid):
        if pin:
            pin_thread(tid, threads)
        gate.wait()
        _worker(q, tid, pairs, m, taken)

    workers = [threading.Thread(target=body, args=(t,)) for t in range(threads)]
    for w in workers:
        w.start()
    gate.wait()
    t0 = time.perf_counter()
    for w in workers:
        w.join()
    elapsed = time.perf_counter() - t0
    verify_queue_run(pairs, threads, taken, q.remaining())
    return elapsed, 2 * pairs * threads


def bench_queue(cfg: BenchConfig) -> BenchResult:
    """Time ``cfg.target`` operations, half enqueues and half dequeues."""
    result = BenchResult(cfg, queue_label(cfg.build, cfg.merge_frequency))
    for rep in range(-1 if cfg.warmup else 0, cfg.repetitions):
        elapsed, ops = run_queue_once(cfg.build, cfg.threads, cfg.target,
                                      cfg.merge_frequency, cfg.pin)
        if rep >= 0:
            result.samples.append(Sample(rep, ops / elapsed, elapsed))
    return result
