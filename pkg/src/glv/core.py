"""Generic global-local view cell.

A ``GlvCell`` holds one global state ``g`` and, per thread, a local view made
of a snapshot ``s`` and the pending updates ``l`` not yet merged.  States
are materialized values of a ``DataType``; the update sequences of the model
are kept only for ``l``, which is bounded by the merge frequency.
"""
from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass
from typing import Any, Hashable, NamedTuple, Protocol

from .history import UNIT, Recorder, new_object_id


class Update(NamedTuple):
    method: str
    arg: Any = UNIT


UpdateSeq = tuple  # tuple[Update, ...]; concatenation is ``+``, identity ``()``


class OrphanedUpdatesWarning(RuntimeWarning):
    """A thread ended with local updates that were never merged."""


class DataType(Protocol):
    """Type-specific algebra plugged into a ``GlvCell``.

    States must be treated as immutable values: ``apply`` returns a new state.
    """

    def initial(self) -> Any: ...

    def apply(self, state, update: Update) -> tuple[Any, Any]:
        """Return ``(return value, new state)``."""

    def query(self, state, q: str) -> Any: ...

    def merge(self, g, s, pending: UpdateSeq) -> Any:
        """New global state after merging a local view into ``g``."""


def apply_all(dtype: DataType, state, updates):
    """``state . updates``: fold the updates over a state."""
    for u in updates:
        _, state = dtype.apply(state, u)
    return state


class CommutativeMerge:
    """Mixin: ``merge(g, (s, l)) = g . l``."""

    def merge(self, g, s, pending):
        return apply_all(self, g, pending)


class CounterType(CommutativeMerge):
    def initial(self):
        return 0

    def apply(self, state, update):
        if update.method != "inc":
            raise ValueError(f"counter has no update {update.method!r}")
        return UNIT, state + 1

    def query(self, state, q):
        if q != "value":
            raise ValueError(f"counter has no query {q!r}")
        return state


class QueueType(CommutativeMerge):
    """FIFO queue; the state is a tuple with the head first."""

    def initial(self):
        return ()

    def apply(self, state, update):
        if update.method == "enqueue":
            return UNIT, state + (update.arg,)
        if update.method == "dequeue":
            if not state:
                return None, state
            return state[0], state[1:]
        raise ValueError(f"queue has no update {update.method!r}")

    def query(self, state, q):
        if q == "size":
            return len(state)
        if q == "peek":
            return state[0] if state else None
        raise ValueError(f"queue has no query {q!r}")


class BagType(CommutativeMerge):
    """Grow-only bag; the state is a sorted tuple (a canonical multiset)."""

    def initial(self):
        return ()

    def apply(self, state, update):
        if update.method != "add":
            raise ValueError(f"bag has no update {update.method!r}")
        return UNIT, tuple(sorted(state + (update.arg,)))

    def query(self, state, q):
        if q == "size":
            return len(state)
        if q == "elements":
            return state
        raise ValueError(f"bag has no query {q!r}")


@dataclass
class LocalView:
    snapshot: Any
    pending: list
    current: Any  # snapshot . pending, kept materialized

    def __del__(self):
        if self.pending and __debug__:
            warnings.warn(
                f"thread ended with {len(self.pending)} unmerged update(s); dropped",
                OrphanedUpdatesWarning,
            )


def _encode(value) -> Any:
    # events carry only ints, null and unit
    if value is None or value is UNIT or isinstance(value, int):
        return value
    return UNIT


class GlvCell:
    """Shared object with one global view and lazily created local views.

    ``pull``, ``strong_read``, ``strong_update`` and ``merge`` each act on the
    global state as one indivisible step (a mutex around the write side;
    reads take the current state reference).  Weak operations only touch the
    calling thread's view.
    """

    def __init__(self, dtype: DataType, recorder: Recorder | None = None,
                 obj_id: Hashable | None = None):
        self.dtype = dtype
        self._global = dtype.initial()
        self._lock = threading.Lock()
        self._local = threading.local()
        self.recorder = recorder
        self.obj_id = new_object_id() if obj_id is None else obj_id

    @property
    def global_state(self):
        return self._global

    def view(self) -> LocalView:
        """The calling thread's local view, created on first use."""
        try:
            return self._local.view
        except AttributeError:
            init = self.dtype.initial()
            self._local.view = LocalView(init, [], init)
            return self._local.view

    def _record(self, kind, type_, ival, oval, stime):
        rec = self.recorder
        rec.emit(kind, type_, self.obj_id, _encode(ival), _encode(oval),
                 stime, rec.tick())

    def pull(self) -> None:
        stime = self.recorder.tick() if self.recorder else 0
        v = self.view()
        g = self._global
        v.snapshot = g
        v.current = apply_all(self.dtype, g, v.pending)
        if self.recorder:
            self._record("pull", "-", UNIT, UNIT, stime)

    def weak_read(self, q: str):
        stime = self.recorder.tick() if self.recorder else 0
        result = self.dtype.query(self.view().current, q)
        if self.recorder:
            self._record("wr", q, UNIT, result, stime)
        return result

    def strong_read(self, q: str):
        stime = self.recorder.tick() if self.recorder else 0
        v = self.view()
        state = apply_all(self.dtype, self._global, v.pending)
        result = self.dtype.query(state, q)
        if self.recorder:
            self._record("sr", q, UNIT, result, stime)
        return result

    def weak_update(self, u: Update):
        stime = self.recorder.tick() if self.recorder else 0
        v = self.view()
        ret, v.current = self.dtype.apply(v.current, u)
        v.pending.append(u)
        if self.recorder:
            self._record("wu", u.method, u.arg, ret, stime)
        return ret

    def strong_update(self, u: Update):
        stime = self.recorder.tick() if self.recorder else 0
        with self._lock:
            ret, self._global = self.dtype.apply(self._global, u)
        if self.recorder:
            self._record("su", u.method, u.arg, ret, stime)
        return ret

    def merge(self) -> None:
        stime = self.recorder.tick() if self.recorder else 0
        v = self.view()
        with self._lock:
            g = self._global = self.dtype.merge(self._global, v.snapshot, tuple(v.pending))
        v.snapshot = v.current = g
        v.pending = []
        if self.recorder:
            self._record("merge", "-", UNIT, UNIT, stime)
