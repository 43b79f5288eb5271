import threading
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from glv.consistency import COUNTER, QUEUE, check
from glv.core import (BagType, CounterType, GlvCell, OrphanedUpdatesWarning, QueueType,
                      Update, apply_all)
from glv.history import UNIT, Recorder
from oracles import SeqModel, counter_eval, queue_eval
from threaded import run_threads

INC = Update("inc")


def counter_cell(**kw):
    return GlvCell(CounterType(), **kw)


def in_thread(fn):
    out = []
    run_threads(lambda: out.append(fn()))
    return out[0]


# -- pull -------------------------------------------------------------------

def test_pull_copies_global_into_snapshot_and_keeps_pending():
    c = counter_cell()
    c.strong_update(INC)
    c.strong_update(INC)
    c.weak_update(INC)
    c.pull()
    v = c.view()
    assert v.snapshot == 2
    assert v.pending == [INC]
    assert c.global_state == 2


def test_pull_on_empty_cell_changes_nothing():
    c = counter_cell()
    c.pull()
    v = c.view()
    assert (v.snapshot, v.pending, c.global_state) == (0, [], 0)


def test_pull_sees_remote_merge():
    c = counter_cell()

    def remote():
        for _ in range(3):
            c.weak_update(INC)
        c.merge()

    run_threads(remote)
    c.pull()
    # sequential oracle: remote t1 does wu x3; merge, then t0 pulls
    m = SeqModel(counter_eval)
    for _ in range(3):
        m.weak_update(1, ("inc", None))
    m.merge(1)
    m.pull(0)
    assert c.weak_read("value") == m.weak_read(0, "value") == 3


def test_pull_is_idempotent_without_interleaving():
    c = counter_cell()
    c.strong_update(INC)
    c.weak_update(INC)
    c.pull()
    first = (c.view().snapshot, list(c.view().pending))
    c.pull()
    assert (c.view().snapshot, c.view().pending) == first


# -- reads --------------------------------------------------------------------

def test_weak_read_is_snapshot_plus_pending():
    c = counter_cell()
    c.weak_update(INC)
    c.merge()
    c.weak_update(INC)
    assert c.weak_read("value") == 2


def test_reads_on_fresh_cell_are_zero():
    c = counter_cell()
    assert c.weak_read("value") == 0
    assert c.strong_read("value") == 0


def test_weak_read_ignores_concurrent_strong_update():
    c = counter_cell()
    c.weak_update(INC)
    before = c.weak_read("value")
    run_threads(lambda: c.strong_update(INC))
    assert c.weak_read("value") == before == 1
    assert c.strong_read("value") == 2


def test_strong_read_is_global_plus_pending():
    c = counter_cell()
    c.strong_update(INC)
    c.strong_update(INC)
    c.weak_update(INC)
    assert c.strong_read("value") == 3


def test_strong_read_sees_remote_merge_of_five():
    c = counter_cell()

    def remote():
        for _ in range(5):
            c.weak_update(INC)
        c.merge()

    run_threads(remote)
    m = SeqModel(counter_eval)
    for _ in range(5):
        m.weak_update(1, ("inc", None))
    m.merge(1)
    assert c.strong_read("value") == m.strong_read(0, "value") == 5


# -- updates ------------------------------------------------------------------

def test_weak_update_appends_in_issue_order():
    c = GlvCell(QueueType())
    c.weak_update(Update("enqueue", 1))
    c.weak_update(Update("enqueue", 2))
    assert c.view().pending == [Update("enqueue", 1), Update("enqueue", 2)]
    assert c.global_state == ()


def test_weak_update_returns_method_result_on_local_state():
    c = GlvCell(QueueType())
    c.weak_update(Update("enqueue", 7))
    assert c.weak_update(Update("dequeue")) == 7


def test_thousand_weak_updates_leave_global_untouched():
    c = counter_cell()
    for _ in range(1000):
        c.weak_update(INC)
    assert in_thread(lambda: c.strong_read("value")) == 0
    assert c.weak_read("value") == 1000


def test_strong_update_appends_to_global_only():
    c = counter_cell()
    c.strong_update(INC)
    for _ in range(4):
        c.weak_update(INC)
    c.strong_update(INC)
    assert c.global_state == 2
    assert len(c.view().pending) == 4


def test_strong_updates_from_many_threads_all_land(fine_switching):
    c = counter_cell()
    n, k = 6, 300

    def body():
        for _ in range(k):
            c.strong_update(INC)

    run_threads(*[body] * n)
    assert c.global_state == n * k


# -- merge --------------------------------------------------------------------

def test_merge_appends_pending_and_resets_view():
    c = counter_cell()
    c.strong_update(INC)
    c.weak_update(INC)
    c.weak_update(INC)
    c.merge()
    v = c.view()
    assert (c.global_state, v.snapshot, v.pending) == (3, 3, [])


def test_empty_merge_acts_as_pull():
    c = counter_cell()
    run_threads(lambda: c.strong_update(INC))
    c.merge()
    assert c.view().snapshot == c.global_state == 1


def test_concurrent_merges_serialize(fine_switching):
    c = GlvCell(QueueType())
    batches = {1: [10, 11, 12], 2: [20, 21, 22, 23, 24]}
    go = threading.Barrier(2)

    def producer(t):
        def body():
            for x in batches[t]:
                c.weak_update(Update("enqueue", x))
            go.wait()
            c.merge()
        return body

    run_threads(producer(1), producer(2))
    outcomes = set()
    for order in ((1, 2), (2, 1)):
        m = SeqModel(queue_eval)
        for t in (1, 2):
            for x in batches[t]:
                m.weak_update(t, ("enqueue", x))
        for t in order:
            m.merge(t)
        outcomes.add(tuple(a for _, a in m.g))
    assert len(c.global_state) == 8
    assert c.global_state in outcomes


# -- properties ---------------------------------------------------------------

programs = st.lists(st.lists(st.sampled_from(["wu", "su", "merge", "pull"]), max_size=25),
                    min_size=1, max_size=4)


@given(programs)
def test_batch_conservation(progs):
    c = GlvCell(BagType())
    expected = Counter()

    def body(t, prog):
        def run():
            for n, op in enumerate(prog):
                item = (t, n)
                if op == "wu":
                    c.weak_update(Update("add", item))
                elif op == "su":
                    c.strong_update(Update("add", item))
                else:
                    getattr(c, op)()
            c.merge()
        return run

    for t, prog in enumerate(progs):
        expected.update((t, n) for n, op in enumerate(prog) if op in ("wu", "su"))
    run_threads(*[body(t, p) for t, p in enumerate(progs)])
    assert Counter(c.global_state) == expected


def test_weak_operations_do_not_touch_other_views_or_global():
    c = counter_cell()
    c.weak_update(INC)
    c.merge()
    mine = c.view()
    snapshot = (mine.snapshot, list(mine.pending))

    def other():
        for _ in range(10):
            c.weak_update(INC)
            c.weak_read("value")

    run_threads(other)
    assert (mine.snapshot, mine.pending) == snapshot
    assert c.global_state == 1


def test_apply_all_concatenation_is_associative():
    dt = QueueType()
    x = [Update("enqueue", 1), Update("dequeue")]
    y = [Update("enqueue", 2)]
    z = [Update("enqueue", 3), Update("dequeue")]
    s0 = dt.initial()
    assert apply_all(dt, apply_all(dt, s0, x + y), z) == apply_all(dt, s0, x + (y + z))
    assert apply_all(dt, s0, []) == s0


def test_orphaned_updates_are_dropped_with_warning():
    c = counter_cell()
    with pytest.warns(OrphanedUpdatesWarning):
        run_threads(lambda: c.weak_update(INC))
        import gc
        gc.collect()
    assert c.strong_read("value") == 0


# -- recording ----------------------------------------------------------------

def test_recorded_counter_cell_history_is_consistent(fine_switching):
    rec = Recorder()
    c = counter_cell(recorder=rec)

    def a():
        c.weak_update(INC)
        c.merge()
        c.strong_update(INC)

    def b():
        c.pull()
        c.weak_read("value")
        c.weak_update(INC)
        c.strong_read("value")

    run_threads(a, b)
    events = rec.events()
    assert len(events) == 7
    assert all(e.stime < e.rtime for e in events)
    assert check(events, COUNTER).consistent


def test_recorded_queue_cell_history_is_consistent():
    rec = Recorder()
    q = GlvCell(QueueType(), recorder=rec)

    def a():
        q.weak_update(Update("enqueue", 1))
        q.weak_update(Update("enqueue", 2))
        q.merge()

    def b():
        q.strong_update(Update("enqueue", 3))
        q.strong_update(Update("dequeue"))

    run_threads(a, b)
    assert check(rec.events(), QUEUE).consistent
    assert [e.oval for e in rec.events() if e.type == "enqueue"] == [UNIT] * 3
