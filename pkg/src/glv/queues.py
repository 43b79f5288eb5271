"""Linearizable and hybrid mergeable FIFO queues.

Four builds share one singly linked list layout with a dummy node at the
head:

====  =========================================================
LL    Michael-Scott two-lock queue (linearizable)
LLF   Michael-Scott lock-free queue (linearizable)
ML    mergeable queue on the two-lock layout
MLF   mergeable queue on the lock-free layout
====  =========================================================

In the mergeable builds ``enqueue`` is a weak update that appends to the
calling thread's private list; ``merge`` publishes the whole private list
with the same number of synchronization steps as a single enqueue.
``dequeue`` is always strong and returns ``None`` when the global list is
empty, whatever the caller has enqueued locally.  A weak dequeue is not
provided.
"""
from __future__ import annotations

import threading
import warnings
from typing import Any

from .atomics import cas_attr
from .core import OrphanedUpdatesWarning
from .history import UNIT, Recorder, new_object_id


class Node:
    __slots__ = ("value", "next")

    def __init__(self, value=None, next=None):
        self.value = value
        self.next = next


class _Batch(list):
    """A thread's unmerged enqueues, oldest first."""
    __slots__ = ()

    def __del__(self):
        if self and __debug__:
            warnings.warn(f"thread ended with {len(self)} unmerged enqueue(s); dropped",
                          OrphanedUpdatesWarning)


def _chain(values) -> tuple[Node, Node]:
    """Link ``values`` into fresh nodes, built back to front."""
    first = last = Node(values[-1])
    for v in reversed(values[:-1]):
        first = Node(v, first)
    return first, last


class _QueueBase:
    label = "?"
    mergeable = False

    def __init__(self, recorder: Recorder | None = None):
        self.head = self.tail = Node()
        self.recorder = recorder
        self.obj_id = new_object_id()

    # subclasses provide _link(first, last) and _dequeue()

    def _emit(self, kind, type_, ival, oval, stime):
        rec = self.recorder
        rec.emit(kind, type_, self.obj_id, ival, oval, stime, rec.tick())

    def enqueue_strong(self, value: Any) -> None:
        """Append ``value`` to the global list as one atomic step."""
        if value is None:
            raise ValueError("None is reserved as the empty marker")
        rec = self.recorder
        node = Node(value)
        if rec is None:
            self._link(node, node)
            return
        stime = rec.tick()
        self._link(node, node)
        self._emit("su", "enqueue", value, UNIT, stime)

    def dequeue(self) -> Any:
        """Remove and return the global head element, or ``None`` if empty."""
        rec = self.recorder
        if rec is None:
            return self._dequeue()
        stime = rec.tick()
        value = self._dequeue()
        self._emit("su", "dequeue", UNIT, value, stime)
        return value

    def merge(self) -> None:
        pass

    def remaining(self) -> list:
        """Elements of the global list, head first.  Call only when quiescent."""
        out = []
        node = self.head.next
        while node is not None:
            out.append(node.value)
            node = node.next
        return out


class TwoLockQueue(_QueueBase):
    """Michael and Scott's two-lock queue.

    The head lock serializes dequeuers and the tail lock serializes
    appenders; the dummy node keeps the two ends apart.
    """
    label = "LL"

    def __init__(self, recorder: Recorder | None = None):
        super().__init__(recorder)
        self._head_lock = threading.Lock()
        self._tail_lock = threading.Lock()

    def _link(self, first: Node, last: Node) -> None:
        with self._tail_lock:
            self.tail.next = first
            self.tail = last

    def _dequeue(self):
        with self._head_lock:
            nxt = self.head.next
            if nxt is None:
                return None
            value = nxt.value
            nxt.value = None
            self.head = nxt
            return value

    def _dequeue_locked(self):
        node = self.head
        nxt = node.next
        if nxt is None:
            return None
        value = nxt.value
        nxt.value = None
        self.head = nxt
        return value

    def enqueue(self, value: Any) -> None:
        if value is None or self.recorder is not None:
            return self.enqueue_strong(value)
        node = Node(value)
        with self._tail_lock:
            self.tail.next = node
            self.tail = node


class LockFreeQueue(_QueueBase):
    """Michael and Scott's lock-free queue.

    ``_link`` accepts a pre-linked chain, so appending a batch costs one
    successful compare-and-set on the tail's ``next`` plus the tail swing.
    A lagging tail is advanced by whichever thread notices it.
    """
    label = "LLF"

    def _link(self, first: Node, last: Node) -> None:
        while True:
            tail = self.tail
            nxt = tail.next
            if tail is not self.tail:
                continue
            if nxt is None:
                if cas_attr(tail, "next", None, first):
                    cas_attr(self, "tail", tail, last)
                    return
            else:
                cas_attr(self, "tail", tail, nxt)

    def _dequeue(self):
        while True:
            head = self.head
            tail = self.tail
            nxt = head.next
            if head is not self.head:
                continue
            if head is tail:
                if nxt is None:
                    return None
                cas_attr(self, "tail", tail, nxt)
            else:
                value = nxt.value
                if cas_attr(self, "head", head, nxt):
                    return value

    enqueue = _QueueBase.enqueue_strong


class _MergeableMixin:
    mergeable = True

    def _batch(self) -> _Batch:
        try:
            return self._local.batch
        except AttributeError:
            b = self._local.batch = _Batch()
            return b

    @property
    def pending(self) -> int:
        """Number of the calling thread's unmerged enqueues."""
        return len(self._batch())

    def enqueue(self, value: Any) -> None:
        """Weak enqueue: append to the calling thread's private list."""
        if value is None:
            raise ValueError("None is reserved as the empty marker")
        if self.recorder is not None:
            stime = self.recorder.tick()
            self._batch().append(value)
            self._emit("wu", "enqueue", value, UNIT, stime)
            return
        try:
            self._local.batch.append(value)
        except AttributeError:
            self._batch().append(value)

    def _take_batch(self):
        """Detach the private list as a linked chain, or ``(None, None)`` if empty."""
        b = self._batch()
        if not b:
            return None, None
        # nodes are built here, off the shared structure, and linked in one step
        first, last = _chain(b)
        b.clear()
        return first, last

    def merge(self) -> None:
        """Append the private list to the global list atomically."""
        rec = self.recorder
        stime = rec.tick() if rec is not None else 0
        first, last = self._take_batch()
        if first is not None:
            self._link(first, last)
        if rec is not None:
            self._emit("merge", "-", UNIT, UNIT, stime)


class MergeableTwoLockQueue(_MergeableMixin, TwoLockQueue):
    label = "ML"

    def __init__(self, recorder: Recorder | None = None):
        super().__init__(recorder)
        self._local = threading.local()

    def merge(self) -> None:
        if self.recorder is not None:
            return _MergeableMixin.merge(self)
        try:
            b = self._local.batch
        except AttributeError:
            return
        if b:
            first, last = _chain(b)
            b.clear()
            with self._tail_lock:
                self.tail.next = first
                self.tail = last

    def dequeue_with_merge(self) -> Any:
        """Merge the caller's private list, then dequeue, as one atomic step."""
        rec = self.recorder
        stime = rec.tick() if rec is not None else 0
        first, last = self._take_batch()
        with self._tail_lock, self._head_lock:
            if first is not None:
                self.tail.next = first
                self.tail = last
            # recorded as its two constituent events, split inside the step
            if rec is not None:
                merged_at, dequeue_at = rec.tick(), rec.tick()
            value = self._dequeue_locked()
        if rec is not None:
            rec.emit("merge", "-", self.obj_id, UNIT, UNIT, stime, merged_at)
            self._emit("su", "dequeue", UNIT, value, dequeue_at)
        return value


class MergeableLockFreeQueue(_MergeableMixin, LockFreeQueue):
    label = "MLF"

    def __init__(self, recorder: Recorder | None = None):
        super().__init__(recorder)
        self._local = threading.local()

    def dequeue_with_merge(self) -> Any:
        """Merge the caller's private list, then dequeue.

        Two successive linearization points: another thread may dequeue in
        between, exactly as if ``merge(); dequeue()`` had been called.
        """
        self.merge()
        return self.dequeue()


BUILDS = {
    "LL": TwoLockQueue,
    "LLF": LockFreeQueue,
    "ML": MergeableTwoLockQueue,
    "MLF": MergeableLockFreeQueue,
}


def make_queue(build: str, recorder: Recorder | None = None) -> _QueueBase:
    try:
        return BUILDS[build](recorder)
    except KeyError:
        raise ValueError(f"unknown queue build {build!r}; expected one of {list(BUILDS)}") from None
