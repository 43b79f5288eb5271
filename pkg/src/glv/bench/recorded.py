"""Small randomized executions with history recording, for the consistency checker.

Each thread runs a random program drawn up front from a seeded generator,
so a seed fixes the programs (the interleaving is still up to the
scheduler).  Programs are sized so that the whole history has at most
``max_global`` global-kind events.
"""
from __future__ import annotations

import random
import sys
import threading
import warnings

from ..core import OrphanedUpdatesWarning
from ..counter import MergeCounter
from ..history import Event, Recorder
from ..queues import make_queue

COUNTER_OPS = {"weak_inc": False, "weak_value": False, "strong_inc": True,
               "strong_value": True, "merge": True, "pull": True}


def _programs(rng: random.Random, threads: int, ops: dict, max_global: int, max_len: int):
    programs = [[] for _ in range(threads)]
    budget = max_global
    names = list(ops)
    for _ in range(threads * max_len):
        t = rng.randrange(threads)
        if len(programs[t]) >= max_len:
            continue
        op = rng.choice(names)
        cost = ops[op]
        if cost > budget:
            continue
        budget -= cost
        programs[t].append(op)
    return programs


def _run(bodies, switch_interval: float):
    old = sys.getswitchinterval()
    sys.setswitchinterval(switch_interval)
    start = threading.Barrier(len(bodies))
    errors = []

    def wrap(body):
        def run():
            start.wait()
            try:
                body()
            except BaseException as exc:  # surfaced in the caller's thread
                errors.append(exc)
        return run

    try:
        # programs may end with unmerged updates; dropping them is intended
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrphanedUpdatesWarning)
            workers = [threading.Thread(target=wrap(b)) for b in bodies]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
    finally:
        sys.setswitchinterval(old)
    if errors:
        raise errors[0]


def random_counter_history(threads: int, seed: int, max_global: int = 12,
                           max_len: int = 8, switch_interval: float = 1e-6) -> list[Event]:
    rng = random.Random(seed)
    rec = Recorder()
    c = MergeCounter(recorder=rec)
    programs = _programs(rng, threads, COUNTER_OPS, max_global, max_len)

    def body(prog):
        def run():
            for op in prog:
                getattr(c, op)()
        return run

    _run([body(p) for p in programs], switch_interval)
    return rec.events()


def queue_ops(build: str) -> dict:
    """Operation name -> number of global-kind events it records."""
    if build in ("ML", "MLF"):
        return {"enqueue": 0, "dequeue": 1, "merge": 1, "dequeue_with_merge": 2}
    return {"enqueue": 1, "dequeue": 1}


def random_queue_history(build: str, threads: int, seed: int, max_global: int = 12,
                         max_len: int = 8, switch_interval: float = 1e-6) -> list[Event]:
    rng = random.Random(seed)
    rec = Recorder()
    q = make_queue(build, recorder=rec)
    programs = _programs(rng, threads, queue_ops(build), max_global, max_len)
    values = iter(range(1, 10**9))
    lock = threading.Lock()

    def body(prog):
        def run():
            for op in prog:
                if op == "enqueue":
                    with lock:
                        v = next(values)
                    q.enqueue(v)
                else:
                    getattr(q, op)()
        return run

    _run([body(p) for p in programs], switch_interval)
    return rec.events()
