"""Operation events, the recorder that produces them, and the trace format.

A trace is line-delimited text.  Each line holds one event as eight
tab-separated fields in tuple order::

    proc  kind  type  obj  ival  oval  stime  rtime

``ival``/``oval`` are decimal integers or the literals ``null`` (absent
value, e.g. an empty dequeue) and ``unit`` (no value).
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Union


class _Unit:
    __slots__ = ()

    def __repr__(self):
        return "UNIT"

    def __reduce__(self):
        return "UNIT"


UNIT = _Unit()
"""Return value of operations that produce nothing (updates, pull, merge)."""

Value = Union[int, None, _Unit]

KINDS = ("su", "sr", "wu", "wr", "pull", "merge")
GLOBAL_KINDS = frozenset({"su", "sr", "pull", "merge"})


class MalformedHistory(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    proc: int
    kind: str
    type: str
    obj: int
    ival: Value
    oval: Value
    stime: int
    rtime: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedHistory(f"unknown kind {self.kind!r}")
        if not self.stime < self.rtime:
            raise MalformedHistory(f"stime must precede rtime: {self}")

    def replace(self, **changes) -> "Event":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return Event(**fields)


def _render(value: Value) -> str:
    if value is None:
        return "null"
    if value is UNIT:
        return "unit"
    return str(int(value))


def _parse(text: str) -> Value:
    if text == "null":
        return None
    if text == "unit":
        return UNIT
    return int(text)


def format_event(e: Event) -> str:
    return "\t".join((
        str(e.proc), e.kind, e.type, str(e.obj),
        _render(e.ival), _render(e.oval), str(e.stime), str(e.rtime),
    ))


def parse_event(line: str) -> Event:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 8:
        raise MalformedHistory(f"expected 8 fields, got {len(parts)}: {line!r}")
    proc, kind, type_, obj, ival, oval, stime, rtime = parts
    return Event(int(proc), kind, type_, int(obj), _parse(ival), _parse(oval),
                 int(stime), int(rtime))


def write_trace(events: Iterable[Event], path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(format_event(e) + "\n")


def read_trace(path) -> list[Event]:
    text = Path(path).read_text()
    return [parse_event(line) for line in text.splitlines() if line.strip()]


_object_ids = itertools.count(1)


def new_object_id() -> int:
    return next(_object_ids)


class Recorder:
    """Collects events from concurrently running threads.

    Every event boundary draws a tick from one process-wide counter, so the
    ticks give a total real-time order.  Each thread appends to its own log;
    ``events()`` combines the logs and is meant to be called after the
    recorded threads have been joined.
    """

    def __init__(self):
        self._clock = 0
        self._clock_lock = threading.Lock()
        self._logs: dict[int, list[Event]] = {}
        self._local = threading.local()

    def tick(self) -> int:
        with self._clock_lock:
            self._clock += 1
            return self._clock

    def _log(self) -> tuple[int, list[Event]]:
        try:
            return self._local.proc, self._local.log
        except AttributeError:
            with self._clock_lock:
                proc = len(self._logs)
                log = self._logs[proc] = []
            self._local.proc, self._local.log = proc, log
            return proc, log

    def emit(self, kind, type_, obj, ival, oval, stime, rtime) -> Event:
        proc, log = self._log()
        e = Event(proc, kind, type_, obj, ival, oval, stime, rtime)
        log.append(e)
        return e

    def events(self) -> list[Event]:
        merged = [e for log in self._logs.values() for e in log]
        merged.sort(key=lambda e: e.stime)
        return merged

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events())
