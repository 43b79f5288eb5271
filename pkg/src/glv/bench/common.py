"""Configuration, result rows and CSV output shared by all benchmarks."""
from __future__ import annotations

import csv
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

CSV_HEADER = ("bench", "threads", "merge_freq", "target", "rep", "throughput", "overshoot",
              "elapsed_s")

# workload sizes: (counter target, queue operations, graph vertices, graph edges)
DESK_SCALE = {"target": 500_000, "queue_ops": 500_000, "vertices": 200_000,
              "edges": 2_000_000}
PAPER_SCALE = {"target": 5_000_000, "queue_ops": 5_000_000, "vertices": 2_000_000,
               "edges": 20_000_000}


class BenchCorrectnessError(AssertionError):
    """A benchmark run violated its correctness oracle; no timing is reported."""


@dataclass
class BenchConfig:
    name: str
    threads: int = 1
    merge_frequency: int = 1
    target: int = DESK_SCALE["target"]  # increments, queue operations or BFS vertices
    repetitions: int = 3
    seed: int = 0
    output: Optional[Path] = None
    build: str = "ML"
    edges: int = DESK_SCALE["edges"]
    pin: bool = False
    warmup: bool = True

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.merge_frequency < 1:
            raise ValueError("merge_frequency must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.target < 1:
            raise ValueError("target must be >= 1")


@dataclass
class Sample:
    rep: int
    throughput: float
    elapsed: float
    overshoot: Optional[int] = None


@dataclass
class BenchResult:
    config: BenchConfig
    label: str
    samples: list[Sample] = field(default_factory=list)
    baseline_elapsed: Optional[float] = None  # single-threaded reference, BFS only

    @property
    def throughput(self) -> float:
        return statistics.median(s.throughput for s in self.samples)

    @property
    def elapsed(self) -> float:
        return statistics.median(s.elapsed for s in self.samples)

    @property
    def overshoot(self) -> Optional[int]:
        vals = [s.overshoot for s in self.samples if s.overshoot is not None]
        return max(vals) if vals else None

    @property
    def speedup(self) -> Optional[float]:
        if self.baseline_elapsed is None:
            return None
        return self.baseline_elapsed / self.elapsed


def _rows(results: Iterable[BenchResult]):
    for r in results:
        c = r.config
        for s in r.samples:
            yield (r.label, c.threads, c.merge_frequency, c.target, s.rep,
                   f"{s.throughput:.6g}", "" if s.overshoot is None else s.overshoot,
                   f"{s.elapsed:.6f}")


def emit_csv(results: Iterable[BenchResult], path=None) -> None:
    """Write the header and one row per sample to ``path`` (stdout if None)."""
    fh = sys.stdout if path is None else open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(_rows(results))
    finally:
        if path is not None:
            fh.close()
