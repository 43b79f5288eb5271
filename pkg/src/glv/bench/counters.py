"""Target-increment counter benchmarks (weak, atomic and hybrid)."""
from __future__ import annotations

from ..counter import MergeCounter, TargetConfig, TargetRun, run_to_target, warm_up
from .common import BenchConfig, BenchCorrectnessError, BenchResult, Sample


def _run(cfg: BenchConfig, mode: str, label: str, validate) -> BenchResult:
    warm_up()
    m = cfg.merge_frequency if mode != "atomic" else 1
    result = BenchResult(cfg, label)
    reps = range(-1 if cfg.warmup else 0, cfg.repetitions)
    for rep in reps:
        r = run_to_target(MergeCounter(m), TargetConfig(cfg.target), cfg.threads, mode,
                          pin=cfg.pin)
        validate(r)
        if rep >= 0:
            result.samples.append(Sample(rep, r.throughput, r.elapsed, r.overshoot))
    return result


def bench_counter_overshoot(cfg: BenchConfig) -> BenchResult:
    """Weak mergeable counter: throughput and overshoot past the target."""
    bound = cfg.threads * cfg.merge_frequency

    def validate(r: TargetRun):
        if not 0 <= r.overshoot <= bound:
            raise BenchCorrectnessError(f"overshoot {r.overshoot} outside [0, {bound}]")
        if cfg.threads == 1 and r.overshoot != 0:
            raise BenchCorrectnessError("single-thread run overshot the target")

    return _run(cfg, "weak", "counter-overshoot", validate)


def _exact(r: TargetRun):
    if r.final != r.target:
        raise BenchCorrectnessError(f"final {r.final} != target {r.target}")


def bench_counter_atomic(cfg: BenchConfig) -> BenchResult:
    """Compare-and-set counter: every increment is a strong operation."""
    return _run(cfg, "atomic", "counter-atomic", _exact)


def bench_counter_hybrid(cfg: BenchConfig) -> BenchResult:
    """Weak increments until close to the target, then strong ones."""
    return _run(cfg, "hybrid", "counter-hybrid", _exact)
