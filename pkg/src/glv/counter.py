"""Mergeable and hybrid counters.

``MergeCounter`` keeps the global count in a shared 64-bit word and a
``(s, l)`` pair per thread.  Its methods are the interpreter-level API (and
the ones that record events).  ``run_to_target`` drives the target-increment
experiment either through that API (``engine="python"``) or through compiled
thread bodies that perform the same steps on the same shared word
(``engine="compiled"``, the default, used for timing).
"""
from __future__ import annotations

import os
import threading
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import atomics
from .atomics import compare_and_swap, fetch_add, load, spin_barrier, store, store_relaxed
from .core import OrphanedUpdatesWarning
from .history import UNIT, Recorder, new_object_id

MAX_TARGET = 2 ** 62
MODES = ("weak", "hybrid", "atomic")
_SLOT_STRIDE = 8  # one cache line of int64 per thread slot


class _View:
    __slots__ = ("s", "l")

    def __init__(self, s: int):
        self.s = s
        self.l = 0

    def __del__(self):
        if self.l and __debug__:
            warnings.warn(f"thread ended with {self.l} unmerged increment(s); dropped",
                          OrphanedUpdatesWarning)


class MergeCounter:
    """Hybrid mergeable counter (increments only).

    ``g`` is only ever changed by a single atomic read-modify-write, so
    merges and strong increments from different threads serialize on it.
    """

    def __init__(self, merge_frequency: int = 1, recorder: Recorder | None = None):
        if merge_frequency < 1:
            raise ValueError("merge_frequency must be >= 1")
        self.merge_frequency = merge_frequency
        self.recorder = recorder
        self.obj_id = new_object_id()
        self.g = atomics.new_word()
        self._local = threading.local()

    def _view(self) -> _View:
        try:
            return self._local.view
        except AttributeError:
            v = self._local.view = _View(0)
            return v

    @property
    def global_value(self) -> int:
        return int(atomics.load_py(self.g))

    @property
    def pending(self) -> int:
        """The calling thread's unmerged increments."""
        return self._view().l

    def _emit(self, kind, type_, oval, stime):
        rec = self.recorder
        rec.emit(kind, type_, self.obj_id, UNIT, oval, stime, rec.tick())

    def weak_inc(self) -> None:
        if self.recorder is None:
            self._view().l += 1
            return
        stime = self.recorder.tick()
        self._view().l += 1
        self._emit("wu", "inc", UNIT, stime)

    def strong_inc(self) -> None:
        stime = self.recorder.tick() if self.recorder else 0
        atomics.fetch_add_py(self.g, 1)
        if self.recorder:
            self._emit("su", "inc", UNIT, stime)

    def strong_inc_below(self, limit: int) -> bool:
        """Strongly increment iff ``g < limit`` at the atomic step.

        A refused attempt is a strong read of the counter and is recorded as
        one.
        """
        stime = self.recorder.tick() if self.recorder else 0
        g = self.g
        while True:
            cur = int(atomics.load_py(g))
            if cur >= limit:
                if self.recorder:
                    self._emit("sr", "value", cur + self._view().l, stime)
                return False
            if atomics.cas_py(g, cur, cur + 1):
                if self.recorder:
                    self._emit("su", "inc", UNIT, stime)
                return True

    def weak_value(self) -> int:
        stime = self.recorder.tick() if self.recorder else 0
        v = self._view()
        value = v.s + v.l
        if self.recorder:
            self._emit("wr", "value", value, stime)
        return value

    def strong_value(self) -> int:
        stime = self.recorder.tick() if self.recorder else 0
        value = int(atomics.load_py(self.g)) + self._view().l
        if self.recorder:
            self._emit("sr", "value", value, stime)
        return value

    def merge(self) -> None:
        stime = self.recorder.tick() if self.recorder else 0
        v = self._view()
        l = v.l
        v.s = int(atomics.fetch_add_py(self.g, l)) + l
        v.l = 0
        if self.recorder:
            self._emit("merge", "-", UNIT, stime)

    def pull(self) -> None:
        stime = self.recorder.tick() if self.recorder else 0
        self._view().s = int(atomics.load_py(self.g))
        if self.recorder:
            self._emit("pull", "-", UNIT, stime)


@dataclass
class TargetConfig:
    target: int
    switch_threshold: int | None = None  # None: threads * merge_frequency

    def threshold_for(self, threads: int, merge_frequency: int) -> int:
        if self.switch_threshold is None:
            return threads * merge_frequency
        return self.switch_threshold


@dataclass
class TargetRun:
    """Outcome of one ``run_to_target``; ``final`` is the counter's value."""
    final: int
    target: int
    elapsed: float
    weak_merged: list[int] = field(default_factory=list)
    strong: list[int] = field(default_factory=list)

    @property
    def overshoot(self) -> int:
        return self.final - self.target

    @property
    def throughput(self) -> float:
        return self.final / self.elapsed if self.elapsed > 0 else float("inf")


@njit(nogil=True, cache=True)
def _weak_kernel(g, target, m, slots, slot, out, row):
    s = load(g, 0)
    l = 0
    merged = 0
    while s + l < target:
        l += 1
        store_relaxed(slots, slot, l)
        if l == m:
            s = fetch_add(g, 0, l) + l
            merged += l
            l = 0
            store_relaxed(slots, slot, 0)
    if l > 0:
        fetch_add(g, 0, l)
        merged += l
        store_relaxed(slots, slot, 0)
    out[row, 0] = merged


@njit(nogil=True, cache=True)
def _strong_to_target(g, target):
    done = 0
    while True:
        cur = load(g, 0)
        if cur >= target:
            return done
        if compare_and_swap(g, 0, cur, cur + 1):
            done += 1


@njit(nogil=True, cache=True)
def _atomic_kernel(g, target, out, row):
    out[row, 1] = _strong_to_target(g, target)


@njit(nogil=True)  # calls sched_yield through ctypes, which numba cannot cache
def _hybrid_kernel(g, flag, arrivals, parties, target, m, threshold, slots, slot, out, row):
    trigger = target - threshold
    s = load(g, 0)
    merged = 0
    while True:
        if s >= trigger or load(flag, 0) != 0:
            store(flag, 0, 1)
            break
        for l in range(1, m + 1):
            store_relaxed(slots, slot, l)
        s = fetch_add(g, 0, m) + m
        merged += m
        store_relaxed(slots, slot, 0)
    # every thread arrives with l == 0: its last batch was merged above
    spin_barrier(arrivals, parties)
    out[row, 0] = merged
    out[row, 1] = _strong_to_target(g, target)


def pin_thread(index: int, threads: int) -> None:
    """Restrict the calling thread to one half of the available CPUs.

    The first half of the workers goes to the lower CPU numbers, the rest to
    the upper ones, approximating a split across two sockets.
    """
    cpus = sorted(os.sched_getaffinity(0))
    half = max(1, len(cpus) // 2)
    group = cpus[:half] if index < (threads + 1) // 2 or len(cpus) == 1 else cpus[half:]
    os.sched_setaffinity(0, group)


def _python_body(c: MergeCounter, mode: str, target: int, threshold: int,
                 flag: threading.Event, barrier: threading.Barrier, out, row):
    m = c.merge_frequency
    weak = strong = 0
    if mode == "weak":
        c.pull()
        while c.weak_value() < target:
            c.weak_inc()
            weak += 1
            if c.pending == m:
                c.merge()
        c.merge()
    elif mode == "hybrid":
        c.pull()
        while True:
            if flag.is_set() or c.weak_value() >= target - threshold:
                flag.set()
                break
            for _ in range(m):
                c.weak_inc()
            c.merge()
            weak += m
        barrier.wait()
    if mode in ("hybrid", "atomic"):
        while c.strong_inc_below(target):
            strong += 1
    out[row, 0] = weak
    out[row, 1] = strong


def run_to_target(c: MergeCounter, cfg: TargetConfig, threads: int, mode: str = "weak",
                  engine: str = "compiled", pin: bool = False) -> TargetRun:
    """Let ``threads`` threads increment ``c`` until ``cfg.target`` is reached.

    weak
        weak increments, a merge every ``merge_frequency`` of them; a thread
        stops once its weak value reaches the target.
    hybrid
        as weak until some thread's merge observes ``g >= target - threshold``;
        then all threads meet at a barrier and continue with strong
        increments guarded by ``g < target``.
    atomic
        guarded strong increments only.

    The measured interval runs from releasing the started threads to joining
    the last one.
    """
    if not 0 < cfg.target <= MAX_TARGET:
        raise ValueError(f"target must be in (0, 2**62], got {cfg.target}")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if engine not in ("compiled", "python"):
        raise ValueError("engine must be 'compiled' or 'python'")
    m = c.merge_frequency
    threshold = cfg.threshold_for(threads, m)
    out = np.zeros((threads, 2), dtype=np.int64)
    slots = np.zeros(threads * _SLOT_STRIDE, dtype=np.int64)
    flag = atomics.new_word()
    arrivals = atomics.new_word()
    py_flag = threading.Event()
    py_barrier = threading.Barrier(threads)
    gate = threading.Barrier(threads + 1)

    def body(row: int):
        if pin:
            pin_thread(row, threads)
        gate.wait()
        if engine == "python":
            _python_body(c, mode, cfg.target, threshold, py_flag, py_barrier, out, row)
        elif mode == "weak":
            _weak_kernel(c.g, cfg.target, m, slots, row * _SLOT_STRIDE, out, row)
        elif mode == "hybrid":
            _hybrid_kernel(c.g, flag, arrivals, threads, cfg.target, m, threshold,
                           slots, row * _SLOT_STRIDE, out, row)
        else:
            _atomic_kernel(c.g, cfg.target, out, row)

    workers = [threading.Thread(target=body, args=(i,), name=f"counter-{i}")
               for i in range(threads)]
    for w in workers:
        w.start()
    gate.wait()
    t0 = time.perf_counter()
    for w in workers:
        w.join()
    elapsed = time.perf_counter() - t0
    return TargetRun(c.global_value, cfg.target, elapsed,
                     out[:, 0].tolist(), out[:, 1].tolist())


def warm_up() -> None:
    """Compile the kernels so that the first timed run does not pay for it."""
    c = MergeCounter(4)
    for mode in MODES:
        run_to_target(c, TargetConfig(8), 1, mode)
        c = MergeCounter(4)
