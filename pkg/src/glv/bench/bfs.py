"""Level-synchronous parallel breadth-first search over the queue builds.

Each level reads the current frontier from one queue and writes the next
frontier into another.  Threads dequeue vertices of the current level until
it is empty, claim unvisited neighbours, enqueue them, merge their private
list at the end of the level (a no-op for the linearizable builds) and meet
at a barrier whose action swaps the two queues.
"""
from __future__ import annotations

import statistics
import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..counter import pin_thread
from ..queues import make_queue
from .common import BenchConfig, BenchCorrectnessError, BenchResult, Sample


@dataclass
class Graph:
    """Directed graph in compressed sparse row form (Python lists for fast slicing)."""
    n: int
    indptr: list
    indices: list

    @property
    def m(self) -> int:
        return len(self.indices)

    def neighbours(self, v: int) -> list:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]


def random_graph(n: int, m: int, seed: int = 0) -> Graph:
    """``m`` edges with endpoints drawn uniformly; no self-loops."""
    if n < 2:
        raise ValueError("need at least two vertices")
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n, m)
    dst = rng.integers(0, n - 1, m)
    dst += dst >= src  # skip the source itself, keeping the rest uniform
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Graph(n, indptr.tolist(), dst[order].tolist())


def sequential_bfs(g: Graph, source: int = 0) -> list:
    """Distances from ``source``; -1 for unreachable vertices."""
    dist = [-1] * g.n
    dist[source] = 0
    indptr, indices = g.indptr, g.indices
    frontier = deque([source])
    while frontier:
        v = frontier.popleft()
        d = dist[v] + 1
        for w in indices[indptr[v]:indptr[v + 1]]:
            if dist[w] < 0:
                dist[w] = d
                frontier.append(w)
    return dist


def parallel_bfs(g: Graph, build: str, threads: int, source: int = 0, pin: bool = False):
    """Return ``(dist, claims, elapsed)``; ``claims`` counts vertices each thread discovered."""
    dist = [-1] * g.n
    dist[source] = 0
    unvisited = dict.fromkeys(range(g.n), True)
    del unvisited[source]
    claim = unvisited.pop  # a single dict operation, atomic under the interpreter lock
    queues = [make_queue(build), make_queue(build)]
    queues[0].enqueue(source)
    queues[0].merge()
    level = [0, 0, False]  # current queue index, depth, finished

    def next_level():
        level[0] ^= 1
        level[1] += 1
        level[2] = queues[level[0]].head.next is None

    barrier = threading.Barrier(threads, action=next_level)
    gate = threading.Barrier(threads + 1)
    claims = [0] * threads
    indptr, indices = g.indptr, g.indices

    def body(tid):
        if pin:
            pin_thread(tid, threads)
        gate.wait()
        found = 0
        while True:
            cur, nxt = queues[level[0]], queues[level[0] ^ 1]
            d = level[1] + 1
            dequeue, enqueue = cur.dequeue, nxt.enqueue
            v = dequeue()
            while v is not None:
                for w in indices[indptr[v]:indptr[v + 1]]:
                    if claim(w, False):
                        dist[w] = d
                        enqueue(w)
                        found += 1
                v = dequeue()
            nxt.merge()
            barrier.wait()
            if level[2]:
                break
        claims[tid] = found

    workers = [threading.Thread(target=body, args=(t,)) for t in range(threads)]
    for w in workers:
        w.start()
    gate.wait()
    t0 = time.perf_counter()
    for w in workers:
        w.join()
    return dist, claims, time.perf_counter() - t0


def verify_bfs(g: Graph, dist: list, claims: list, reference: list) -> None:
    if dist != reference:
        bad = next(i for i, (a, b) in enumerate(zip(dist, reference)) if a != b)
        raise BenchCorrectnessError(
            f"incorrect traversal: vertex {bad} at depth {dist[bad]}, expected {reference[bad]}")
    reached = sum(1 for d in reference if d >= 0)
    if sum(claims) != reached - 1:
        raise BenchCorrectnessError(
            f"{sum(claims)} discoveries for {reached - 1} reachable vertices")


def bench_bfs(cfg: BenchConfig, graph: Graph | None = None) -> BenchResult:
    """Parallel BFS with ``cfg.build``; speedup is against ``sequential_bfs``."""
    g = graph if graph is not None else random_graph(cfg.target, cfg.edges, cfg.seed)
    result = BenchResult(cfg, f"bfs-{cfg.build}")
    baseline = []
    for rep in range(-1 if cfg.warmup else 0, cfg.repetitions):
        t0 = time.perf_counter()
        reference = sequential_bfs(g)
        t_seq = time.perf_counter() - t0
        dist, claims, elapsed = parallel_bfs(g, cfg.build, cfg.threads, pin=cfg.pin)
        verify_bfs(g, dist, claims, reference)
        if rep >= 0:
            baseline.append(t_seq)
            reached = sum(claims) + 1
            result.samples.append(Sample(rep, reached / elapsed, elapsed))
    result.baseline_elapsed = statistics.median(baseline)
    return result
