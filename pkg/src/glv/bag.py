"""Grow-only mergeable bag on a multi-headed linked list.

Every thread owns a private segment of freshly added nodes whose last node
links to the global list as the thread last saw it.  A merge splices the
segment in front of the global list and moves the global head to it.  Nodes
reachable from any head are never modified again, so a thread's traversal is
unaffected by merges performed elsewhere.
"""
from __future__ import annotations

import threading
import warnings
from typing import Any

from .atomics import cas_attr
from .core import OrphanedUpdatesWarning


class _Node:
    __slots__ = ("elem", "next")

    def __init__(self, elem, next):
        self.elem = elem
        self.next = next


class _Segment:
    __slots__ = ("first", "last", "snapshot", "size")

    def __init__(self, snapshot):
        self.first = None
        self.last = None
        self.snapshot = snapshot
        self.size = 0

    def __del__(self):
        if self.size and __debug__:
            warnings.warn(f"thread ended with {self.size} unmerged element(s); dropped",
                          OrphanedUpdatesWarning)


class MergeBag:
    """Mergeable bag exposing ``weak_add``, ``weak_iterate``, ``pull`` and ``merge``.

    ``lock_free=True`` publishes a merge with a compare-and-set retry loop on
    the global head; otherwise a mutex guards the splice.
    """

    def __init__(self, lock_free: bool = True):
        self.head = None
        self.lock_free = lock_free
        self._lock = threading.Lock()
        self._local = threading.local()

    def _segment(self) -> _Segment:
        try:
            return self._local.seg
        except AttributeError:
            seg = self._local.seg = _Segment(self.head)
            return seg

    def weak_add(self, elem: Any) -> None:
        seg = self._segment()
        node = _Node(elem, seg.first if seg.first is not None else seg.snapshot)
        if seg.last is None:
            seg.last = node
        seg.first = node
        seg.size += 1

    def weak_iterate(self) -> list:
        seg = self._segment()
        out = []
        node = seg.first if seg.first is not None else seg.snapshot
        while node is not None:
            out.append(node.elem)
            node = node.next
        return out

    def pull(self) -> None:
        seg = self._segment()
        seg.snapshot = self.head
        if seg.last is not None:
            # the segment is still private, so relinking it is invisible to others
            seg.last.next = seg.snapshot

    def merge(self) -> None:
        seg = self._segment()
        if seg.first is None:
            self.pull()
            return
        first, last = seg.first, seg.last
        if self.lock_free:
            while True:
                head = self.head
                last.next = head
                if cas_attr(self, "head", head, first):
                    break
        else:
            with self._lock:
                last.next = self.head
                self.head = first
        seg.first = seg.last = None
        seg.size = 0
        seg.snapshot = first
