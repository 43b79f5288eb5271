import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glv.consistency import (COUNTER, QUEUE, AbstractExecution, History, SearchBudgetExceeded,
                             check, context_of, derive_vis, f_counter, f_queue, session_order,
                             transitive_closure, verify_witness)
from glv.history import UNIT, Event, MalformedHistory
from oracles import SeqModel, EVALS, operationally_consistent

OBJ = 1


def ev(proc, kind, type_, stime, rtime, ival=UNIT, oval=UNIT):
    return Event(proc, kind, type_, OBJ, ival, oval, stime, rtime)


def seq(*ops, proc=0, start=1):
    """Back-to-back events on one thread: ops are (kind, type, ival, oval)."""
    out = []
    t = start
    for kind, type_, ival, oval in ops:
        out.append(ev(proc, kind, type_, t, t + 1, ival, oval))
        t += 2
    return out


def merge_pull_example(wr_value, b_start=5):
    a = seq(("wu", "inc", UNIT, UNIT), ("merge", "-", UNIT, UNIT), proc=0, start=1)
    b = seq(("pull", "-", UNIT, UNIT), ("wr", "value", UNIT, wr_value), proc=1, start=b_start)
    return a + b


# -- session order --------------------------------------------------------------

def test_session_order_single_thread_chain():
    h = History(seq(*[("wu", "inc", UNIT, UNIT)] * 3))
    assert session_order(h) == {(0, 1), (0, 2), (1, 2)}


def test_session_order_has_no_cross_thread_edges():
    h = History([ev(0, "wu", "inc", 1, 5), ev(1, "wu", "inc", 2, 3)])
    assert session_order(h) == set()


def test_session_order_empty():
    assert session_order(History([])) == set()


def test_overlapping_same_thread_operations_rejected():
    with pytest.raises(MalformedHistory):
        History([ev(0, "wu", "inc", 1, 4), ev(0, "wu", "inc", 3, 6)])


# -- visibility -----------------------------------------------------------------

def test_remote_weak_inc_reaches_weak_read_through_merge_and_pull():
    h = History(merge_pull_example(1))
    ar = [0, 1, 2, 3]
    vis = transitive_closure(derive_vis(h, ar))
    assert (1, 2) in vis      # merge -> pull (global order)
    assert (2, 3) in vis      # pull -> wr (thread-local order)
    assert (0, 3) in vis      # wu -> wr by transitivity
    assert (0, 3) not in derive_vis(h, ar)


def test_own_weak_update_visible_to_strong_read():
    h = History(seq(("wu", "inc", UNIT, UNIT), ("sr", "value", UNIT, 1)))
    assert (0, 1) in derive_vis(h, [0, 1])


def test_strong_update_not_visible_to_following_weak_read():
    h = History(seq(("su", "inc", UNIT, UNIT), ("wr", "value", UNIT, 0)))
    vis = transitive_closure(derive_vis(h, [0, 1]))
    assert (0, 1) not in vis
    h2 = History(seq(("su", "inc", UNIT, UNIT), ("pull", "-", UNIT, UNIT),
                     ("wr", "value", UNIT, 1)))
    assert (0, 2) in transitive_closure(derive_vis(h2, [0, 1, 2]))


def test_derive_vis_requires_total_ar():
    h = History(seq(("su", "inc", UNIT, UNIT), ("su", "inc", UNIT, UNIT)))
    with pytest.raises(ValueError):
        derive_vis(h, [0])


def test_derive_vis_is_exact_union():
    # t0: su, wr ; t1: merge, sr  with ar = su, merge, wr, sr
    evs = [ev(0, "su", "inc", 1, 2), ev(0, "wr", "value", 3, 4, oval=0),
           ev(1, "merge", "-", 1, 2), ev(1, "sr", "value", 3, 4, oval=1)]
    h = History(evs)
    assert derive_vis(h, [0, 2, 1, 3]) == {(0, 2), (0, 3), (2, 3)}


# -- context --------------------------------------------------------------------

def test_context_of_first_event_is_empty():
    h = History(merge_pull_example(1))
    a = AbstractExecution.from_ar(h, [0, 1, 2, 3])
    assert context_of(a, 0).members == []


def test_context_in_sequential_history_is_all_prior_local_and_merged_ops():
    h = History(seq(("wu", "inc", UNIT, UNIT), ("su", "inc", UNIT, UNIT),
                    ("merge", "-", UNIT, UNIT), ("wu", "inc", UNIT, UNIT),
                    ("wr", "value", UNIT, 3)))
    a = AbstractExecution.from_ar(h, range(5))
    # the su reaches the wr through the merge
    assert context_of(a, 4).members == [0, 1, 2, 3]
    assert f_counter(h[4], context_of(a, 4)) == {3}


def test_context_after_merge_chain_includes_remote_updates():
    h = History(merge_pull_example(1))
    a = AbstractExecution.from_ar(h, [0, 1, 2, 3])
    ctx = context_of(a, 3)
    assert ctx.members == [0, 1, 2]
    assert {(0, 1), (1, 2), (0, 2)} <= ctx.vis


# -- specification functions ----------------------------------------------------

def test_f_counter_counts_weak_and_strong_incs_equally():
    evs = seq(("wu", "inc", UNIT, UNIT), ("su", "inc", UNIT, UNIT),
              ("wu", "inc", UNIT, UNIT), ("sr", "value", UNIT, 3))
    h = History(evs)
    a = AbstractExecution.from_ar(h, range(4))
    assert f_counter(h[3], context_of(a, 3)) == {3}
    assert f_counter(h[0], context_of(a, 0)) == {UNIT}
    assert replay(evs, "counter")[-1] == 3


def test_f_counter_empty_context_is_zero():
    h = History(seq(("wr", "value", UNIT, 0)))
    a = AbstractExecution.from_ar(h, [0])
    assert f_counter(h[0], context_of(a, 0)) == {0}


def test_f_queue_merged_batch_dequeues_head():
    evs = seq(("wu", "enqueue", 1, UNIT), ("wu", "enqueue", 2, UNIT),
              ("merge", "-", UNIT, UNIT), ("su", "dequeue", UNIT, 1))
    h = History(evs)
    a = AbstractExecution.from_ar(h, range(4))
    assert f_queue(h[3], context_of(a, 3)) == {1}
    assert f_queue(h[0], context_of(a, 0)) == {UNIT}


def test_f_queue_empty_context_gives_empty_marker():
    h = History(seq(("su", "dequeue", UNIT, None)))
    a = AbstractExecution.from_ar(h, [0])
    assert f_queue(h[0], context_of(a, 0)) == {None}


def two_batches(deq):
    a = seq(("wu", "enqueue", 10, UNIT), ("wu", "enqueue", 11, UNIT), proc=0, start=1)
    b = seq(("wu", "enqueue", 20, UNIT), ("wu", "enqueue", 21, UNIT), proc=1, start=1)
    merges = [ev(0, "merge", "-", 10, 20), ev(1, "merge", "-", 11, 21)]
    return a + b + merges + [ev(2, "su", "dequeue", 30, 31, oval=deq)]


def test_f_queue_two_batches_head_follows_ar():
    h = History(two_batches(10))
    for ar, head in (([0, 1, 2, 3, 4, 5, 6], 10), ([0, 1, 2, 3, 5, 4, 6], 20)):
        a = AbstractExecution.from_ar(h, ar)
        assert f_queue(h[6], context_of(a, 6)) == {head}


@pytest.mark.parametrize("deq,ok", [(10, True), (20, True), (11, False), (21, False),
                                    (None, False)])
def test_check_two_concurrent_batches(deq, ok):
    assert check(two_batches(deq), QUEUE).consistent is ok


# -- check ------------------------------------------------------------------------

def test_merge_pull_example_consistent():
    v = check(merge_pull_example(1), COUNTER)
    assert v.consistent
    assert len(v.witness) == 4


@pytest.mark.parametrize("oval", [0, 2])
def test_merge_pull_example_wrong_value_rejected(oval):
    v = check(merge_pull_example(oval), COUNTER)
    assert not v.consistent
    assert v.violation.event.oval == oval
    assert "RVal" in v.violation.describe()


def test_pull_overlapping_merge_may_miss_it():
    # pull [3, 8] overlaps merge [3, 4]; either order is legal
    evs = [ev(0, "wu", "inc", 1, 2), ev(0, "merge", "-", 3, 4),
           ev(1, "pull", "-", 3, 8), ev(1, "wr", "value", 9, 10, oval=0)]
    assert check(evs, COUNTER).consistent
    assert check([e.replace(oval=1) if e.kind == "wr" else e for e in evs], COUNTER)


def test_strong_inc_invisible_to_weak_read_without_pull():
    base = seq(("su", "inc", UNIT, UNIT), ("wr", "value", UNIT, 0))
    assert check(base, COUNTER).consistent
    assert not check([base[0], base[1].replace(oval=1)], COUNTER).consistent


def test_weak_read_larger_than_all_updates_rejected():
    evs = seq(("wu", "inc", UNIT, UNIT), ("su", "inc", UNIT, UNIT), ("wr", "value", UNIT, 5))
    assert not check(evs, COUNTER).consistent


def test_witness_satisfies_global_order():
    evs = two_batches(20)
    h = History(evs)
    v = check(h, QUEUE)
    index = {id(e): i for i, e in enumerate(h.events)}
    ar = [index[id(e)] for e in v.witness]
    vis = transitive_closure(derive_vis(h, ar))
    for i, x in enumerate(ar):
        for y in ar[i + 1:]:
            if h[x].kind in ("su", "merge") and h[y].kind in ("su", "merge", "pull", "sr"):
                assert (x, y) in vis
    assert verify_witness(h, ar, QUEUE) is None


def test_real_time_order_between_merges_is_respected():
    # merge by t1 returns before merge by t0 starts, so t1's batch is first
    a = seq(("wu", "enqueue", 1, UNIT), proc=0, start=1) + [ev(0, "merge", "-", 20, 21)]
    b = seq(("wu", "enqueue", 2, UNIT), proc=1, start=1) + [ev(1, "merge", "-", 10, 11)]
    tail = [ev(2, "su", "dequeue", 30, 31, oval=1)]
    assert not check(a + b + tail, QUEUE).consistent
    assert check(a + b + [tail[0].replace(oval=2)], QUEUE).consistent


def test_too_many_global_events_exceeds_budget():
    evs = seq(*[("su", "inc", UNIT, UNIT)] * 13)
    with pytest.raises(SearchBudgetExceeded):
        check(evs, COUNTER)
    assert check(evs, COUNTER, max_global=13).consistent


def test_node_budget_exceeded():
    evs = [ev(p, "su", "inc", 1, 100) for p in range(6)]
    evs += [ev(p, "sr", "value", 101, 102, oval=6) for p in range(6)]
    with pytest.raises(SearchBudgetExceeded):
        check(evs, COUNTER, budget=3)


def test_objects_checked_independently():
    x = merge_pull_example(1)
    y = [e.replace(obj=2, stime=e.stime + 100, rtime=e.rtime + 100) for e in merge_pull_example(1)]
    assert check(x + y, "counter").consistent
    y[-1] = y[-1].replace(oval=7)
    assert not check(x + y, "counter").consistent


# -- agreement with the operational oracle ---------------------------------------

def replay(events, type_name):
    m = SeqModel(EVALS[type_name])
    return [m.apply(e.proc, e.kind, e.type, e.ival) for e in events]


COUNTER_OPS = [("wu", "inc"), ("su", "inc"), ("wr", "value"), ("sr", "value"),
               ("pull", "-"), ("merge", "-")]
QUEUE_OPS = [("wu", "enqueue"), ("su", "enqueue"), ("su", "dequeue"), ("sr", "size"),
             ("wr", "peek"), ("sr", "peek"), ("pull", "-"), ("merge", "-")]


def random_history(rng, type_name, threads, n, mutate):
    """Execute random ops atomically in a random interleaving, then widen intervals."""
    ops = COUNTER_OPS if type_name == "counter" else QUEUE_OPS
    m = SeqModel(EVALS[type_name])
    raw = []
    nxt = 100
    for pos in range(n):
        p = rng.randrange(threads)
        kind, type_ = rng.choice(ops)
        ival = UNIT
        if type_ == "enqueue":
            ival, nxt = nxt, nxt + 1
        raw.append([p, kind, type_, ival, m.apply(p, kind, type_, ival), 10 * pos + 5])
    # intervals: overlap freely across threads, never within one
    last_end = {}
    bounds = []
    for i, (p, *_rest, point) in enumerate(raw):
        later = [r[-1] for r in raw[i + 1:] if r[0] == p]
        hi = min(later[0] - 1 if later else point + 40, point + rng.randint(1, 40))
        lo = max(last_end.get(p, -1) + 1, point - rng.randint(1, 40))
        hi = max(hi, point + 1)
        last_end[p] = hi
        bounds.append((lo, hi))
    events = [Event(p, k, t, OBJ, iv, ov, lo, hi)
              for (p, k, t, iv, ov, _), (lo, hi) in zip(raw, bounds)]
    if mutate:
        reads = [i for i, e in enumerate(events) if e.oval is not UNIT]
        if reads:
            i = rng.choice(reads)
            old = events[i].oval
            new = rng.choice([x for x in (None, 0, 1, 2, 3, 100, 101, 102) if x != old])
            events[i] = events[i].replace(oval=new)
    return events


@settings(max_examples=300)
@given(st.sampled_from(["counter", "queue"]), st.integers(1, 3), st.integers(1, 8),
       st.booleans(), st.randoms(use_true_random=False))
def test_checker_agrees_with_operational_oracle(type_name, threads, n, mutate, rnd):
    events = random_history(rnd, type_name, threads, n, mutate)
    expected = operationally_consistent(events, type_name)
    assert check(events, type_name).consistent == expected


def test_unmutated_random_histories_are_consistent():
    rng = random.Random(7)
    for _ in range(200):
        t = rng.choice(["counter", "queue"])
        events = random_history(rng, t, rng.randint(2, 4), rng.randint(4, 10), False)
        assert check(events, t).consistent
