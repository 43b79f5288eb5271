"""GLConsistency checking of recorded histories.

A history is consistent when some arbitration order ``ar`` yields a
visibility relation

    vis = ar|su,merge  U  ar|su,merge->pull,sr  U  so|wu,wr,pull,merge  U  so|wu->sr

under which every event's return value is allowed by the type's
specification function applied to the event's context (its transitive
vis-predecessors).

Only the relative order of the global-kind events (su, sr, pull, merge)
influences vis.  ``check`` enumerates those orders, restricted to orders that
respect real time, and prunes a branch as soon as an event whose context is
already fixed returns a value the specification rejects.  Each witness is
re-verified against the relational definitions before it is returned.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Optional, Sequence

from .history import GLOBAL_KINDS, UNIT, Event, MalformedHistory

Relation = set  # set[tuple[int, int]] over event indices

SM = frozenset({"su", "merge"})
PULL_SR = frozenset({"pull", "sr"})
LOCAL_SO = frozenset({"wu", "wr", "pull", "merge"})


class SearchBudgetExceeded(RuntimeError):
    pass


class History:
    """An immutable list of events; events are referred to by index."""

    def __init__(self, events: Iterable[Event]):
        self.events: tuple[Event, ...] = tuple(events)
        self.chains: dict[int, list[int]] = defaultdict(list)
        for i in sorted(range(len(self.events)), key=lambda i: self.events[i].stime):
            self.chains[self.events[i].proc].append(i)
        for proc, chain in self.chains.items():
            for a, b in zip(chain, chain[1:]):
                if not self.events[a].rtime < self.events[b].stime:
                    raise MalformedHistory(
                        f"overlapping operations on thread {proc}: "
                        f"{self.events[a]} / {self.events[b]}")

    def __len__(self):
        return len(self.events)

    def __getitem__(self, i) -> Event:
        return self.events[i]

    def objects(self) -> list:
        return sorted({e.obj for e in self.events})

    def restrict_to(self, obj) -> "History":
        return History(e for e in self.events if e.obj == obj)


def session_order(h: History) -> Relation:
    """Pairs ``(a, b)``: same thread and ``a`` returns before ``b`` starts."""
    so = set()
    for chain in h.chains.values():
        for i, a in enumerate(chain):
            for b in chain[i + 1:]:
                so.add((a, b))
    return so


def derive_vis(h: History, ar: Sequence[int], so: Relation | None = None) -> Relation:
    """The visibility relation determined by ``ar`` (the plain union)."""
    if sorted(ar) != list(range(len(h))):
        raise ValueError("ar must be a total order over all events of the history")
    so = session_order(h) if so is None else so
    kinds = [e.kind for e in h.events]
    vis = set()
    for i, a in enumerate(ar):
        if kinds[a] not in SM:
            continue
        for b in ar[i + 1:]:
            if kinds[b] in SM or kinds[b] in PULL_SR:
                vis.add((a, b))
    for a, b in so:
        if kinds[a] in LOCAL_SO and kinds[b] in LOCAL_SO:
            vis.add((a, b))
        elif kinds[a] == "wu" and kinds[b] == "sr":
            vis.add((a, b))
    return vis


def transitive_closure(rel: Relation) -> Relation:
    succ = defaultdict(set)
    for a, b in rel:
        succ[a].add(b)
    closed = set()
    for start in list(succ):
        stack = list(succ[start])
        seen = set()
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(succ.get(x, ()))
        closed.update((start, x) for x in seen)
    return closed


@dataclass
class Context:
    """The part of an abstract execution that precedes an event in vis."""
    history: History
    members: list[int]  # event indices, in ar order
    ar_pos: dict[int, int]
    full_vis: Optional[Relation] = field(default=None, repr=False)

    @property
    def events(self) -> list[Event]:
        return [self.history.events[i] for i in self.members]

    def of_kind(self, *kinds) -> list[Event]:
        return [self.history.events[i] for i in self.members
                if self.history.events[i].kind in kinds]

    @cached_property
    def vis(self) -> Optional[Relation]:
        """vis restricted to the members; computed on first use."""
        if self.full_vis is None:
            return None
        keep = set(self.members)
        return {(x, y) for x, y in self.full_vis if x in keep and y in keep}


@dataclass
class AbstractExecution:
    history: History
    ar: list[int]
    vis: Relation  # transitively closed

    @classmethod
    def from_ar(cls, h: History, ar: Sequence[int]) -> "AbstractExecution":
        return cls(h, list(ar), transitive_closure(derive_vis(h, ar)))

    @cached_property
    def predecessors(self) -> dict[int, set[int]]:
        preds = defaultdict(set)
        for x, y in self.vis:
            preds[y].add(x)
        return preds


def context_of(a: AbstractExecution, e: int) -> Context:
    """``cxt(A, e)``: vis-predecessors of ``e`` with vis and ar restricted."""
    pos = {x: i for i, x in enumerate(a.ar)}
    members = sorted(a.predecessors.get(e, ()), key=pos.__getitem__)
    return Context(a.history, members, {x: pos[x] for x in members}, a.vis)


# -- type specifications -----------------------------------------------------

SpecFn = Callable[[Event, Context], set]


@dataclass(frozen=True)
class TypeSpec:
    """Specification function of a type plus an optional search-state key.

    ``state_key(history, placed)`` maps the arbitration-ordered su/merge
    events placed so far to a value that determines every later return
    value; orders with equal keys are explored once.  ``None`` disables the
    deduplication beyond the placed set itself.
    """
    name: str
    F: SpecFn
    state_key: Optional[Callable[[History, list[int]], Hashable]] = None


def f_counter(e: Event, ctx: Context) -> set:
    if e.type == "value":
        return {sum(1 for x in ctx.events if x.type == "inc")}
    return {UNIT}


def _queue_replay(e: Event, ctx: Context) -> list:
    events = ctx.history.events
    merges_by_proc = defaultdict(list)
    batchless = []
    for i in ctx.members:
        x = events[i]
        if x.kind == "merge":
            merges_by_proc[x.proc].append(x)
    batches = defaultdict(list)
    for i in sorted(ctx.members, key=lambda i: events[i].stime):
        x = events[i]
        if x.kind != "wu" or x.type != "enqueue":
            continue
        owner = next((m for m in sorted(merges_by_proc[x.proc], key=lambda m: m.stime)
                      if m.stime > x.rtime), None)
        if owner is None:
            batchless.append(x)
        else:
            batches[owner].append(x.ival)
    state = []
    for i in ctx.members:
        x = events[i]
        if x.kind == "merge":
            state.extend(batches.get(x, ()))
        elif x.kind == "su" and x.type == "enqueue":
            state.append(x.ival)
        elif x.kind == "su" and x.type == "dequeue" and state:
            state.pop(0)
    # unmerged own enqueues (visible only to strong reads) go last, like g . l
    state.extend(x.ival for x in batchless if x.proc == e.proc)
    return state


def f_queue(e: Event, ctx: Context) -> set:
    if e.type == "dequeue" or (e.kind in ("sr", "wr") and e.type == "peek"):
        state = _queue_replay(e, ctx)
        return {state[0] if state else None}
    if e.kind in ("sr", "wr") and e.type == "size":
        return {len(_queue_replay(e, ctx))}
    return {UNIT}


def _queue_state_key(h: History, placed: list[int]) -> Hashable:
    # every su/merge placed so far is visible to the next su; the queue content
    # they produce determines all later dequeue results
    state = []
    for i in placed:
        x = h.events[i]
        if x.kind == "merge":
            chain = h.chains[x.proc]
            k = chain.index(i)
            batch = []
            for j in reversed(chain[:k]):
                y = h.events[j]
                if y.kind == "merge":
                    break
                if y.kind == "wu" and y.type == "enqueue":
                    batch.append(y.ival)
            state.extend(reversed(batch))
        elif x.type == "enqueue":
            state.append(x.ival)
        elif x.type == "dequeue" and state:
            state.pop(0)
    return tuple(state)


COUNTER = TypeSpec("counter", f_counter, lambda h, placed: None)
QUEUE = TypeSpec("queue", f_queue, _queue_state_key)
SPECS = {"counter": COUNTER, "queue": QUEUE}


# -- verdicts ------------------------------------------------------------------

@dataclass
class Violation:
    event: Event
    allowed: set
    context_size: int

    def describe(self) -> str:
        allowed = ", ".join(sorted(map(repr, self.allowed)))
        return (f"RVal violated: {self.event.kind} {self.event.type} on thread "
                f"{self.event.proc} returned {self.event.oval!r}, allowed {{{allowed}}} "
                f"(context of {self.context_size} events, stime={self.event.stime})")


@dataclass
class Verdict:
    consistent: bool
    witness: Optional[list[Event]] = None  # ar, one entry per event
    violation: Optional[Violation] = None
    explored: int = 0

    def __bool__(self):
        return self.consistent


def verify_witness(h: History, ar: Sequence[int], spec: TypeSpec) -> Optional[Violation]:
    """Check all four predicates for a given ``ar``; return the first violation.

    Raises AssertionError when the structural predicates fail, which would
    mean ``ar`` is not a legal witness at all.
    """
    so = session_order(h)
    kinds = [e.kind for e in h.events]
    pos = {x: i for i, x in enumerate(ar)}
    plain = derive_vis(h, ar, so)
    ex = AbstractExecution(h, list(ar), transitive_closure(plain))
    for a, b in plain:
        assert (a, b) in ex.vis
    # GlobalOrder and ThreadLocalOrder
    for a in range(len(h)):
        for b in range(len(h)):
            if pos[a] >= pos[b]:
                continue
            if kinds[a] in SM and (kinds[b] in SM or kinds[b] in PULL_SR):
                assert (a, b) in ex.vis, "GlobalOrder"
            if kinds[a] in GLOBAL_KINDS and kinds[b] in GLOBAL_KINDS:
                assert not h[b].rtime < h[a].stime, "ar contradicts real time"
    for a, b in so:
        if (kinds[a] in LOCAL_SO and kinds[b] in LOCAL_SO) or (kinds[a], kinds[b]) == ("wu", "sr"):
            assert (a, b) in ex.vis, "ThreadLocalOrder"
    for e in ar:
        ctx = context_of(ex, e)
        allowed = spec.F(h[e], ctx)
        if h[e].oval not in allowed:
            return Violation(h[e], allowed, len(ctx.members))
    return None


class _Search:
    def __init__(self, h: History, spec: TypeSpec, budget: int):
        self.h = h
        self.spec = spec
        self.budget = budget
        self.explored = 0
        self.first_violation: Optional[Violation] = None
        ev = h.events
        self.glob = [i for i, e in enumerate(ev) if e.kind in GLOBAL_KINDS]
        gindex = {i: k for k, i in enumerate(self.glob)}
        self.rt_pred = [0] * len(self.glob)
        for k, i in enumerate(self.glob):
            for k2, j in enumerate(self.glob):
                if ev[j].rtime < ev[i].stime:
                    self.rt_pred[k] |= 1 << k2
        self.gindex = gindex
        self.procs = sorted(h.chains)
        self.chains = [h.chains[p] for p in self.procs]
        self.proc_slot = {p: n for n, p in enumerate(self.procs)}
        self.closure = [0] * len(ev)
        self.order: list[int] = []
        self.ar_pos: dict[int, int] = {}
        self.failed: set = set()

    def _check(self, i: int) -> bool:
        e = self.h.events[i]
        mask = self.closure[i]
        members = [j for j in self.order if mask >> j & 1]
        ctx = Context(self.h, members, self.ar_pos)
        allowed = self.spec.F(e, ctx)
        if e.oval in allowed:
            return True
        if self.first_violation is None:
            self.first_violation = Violation(e, allowed, len(members))
        return False

    def _process(self, i: int) -> None:
        self.ar_pos[i] = len(self.order)
        self.order.append(i)

    def _advance(self, slot: int, state) -> bool:
        """Process local events of one thread up to its next global event."""
        pos, so_acc, wu_acc, sm_acc = state
        chain = self.chains[slot]
        p = pos[slot]
        ev = self.h.events
        while p < len(chain) and ev[chain[p]].kind not in GLOBAL_KINDS:
            i = chain[p]
            self.closure[i] = so_acc[slot]
            self._process(i)
            if not self._check(i):
                pos[slot] = p
                return False
            so_acc[slot] |= (1 << i) | self.closure[i]
            if ev[i].kind == "wu":
                wu_acc[slot] |= (1 << i) | self.closure[i]
            p += 1
        pos[slot] = p
        return True

    def run(self) -> Optional[list[int]]:
        n = len(self.procs)
        state = ([0] * n, [0] * n, [0] * n, 0)
        for slot in range(n):
            if not self._advance(slot, state):
                return None
        return self._dfs(0, state, [])

    def _dfs(self, placed: int, state, sm_order: list[int]) -> Optional[list[int]]:
        if placed == (1 << len(self.glob)) - 1:
            return list(self.order)
        pos, so_acc, wu_acc, sm_acc = state
        key = (placed, sm_acc, tuple(so_acc), tuple(wu_acc),
               self.spec.state_key(self.h, sm_order) if self.spec.state_key else tuple(sm_order))
        if key in self.failed:
            return None
        ev = self.h.events
        for k, i in enumerate(self.glob):
            if placed >> k & 1 or (self.rt_pred[k] & ~placed):
                continue
            self.explored += 1
            if self.explored > self.budget:
                raise SearchBudgetExceeded(
                    f"explored more than {self.budget} search nodes")
            e = ev[i]
            slot = self.proc_slot[e.proc]
            mark = len(self.order)
            npos, nso, nwu = list(pos), list(so_acc), list(wu_acc)
            if e.kind == "su":
                cl = sm_acc
            elif e.kind == "sr":
                cl = sm_acc | wu_acc[slot]
            else:
                cl = sm_acc | so_acc[slot]
            self.closure[i] = cl
            self._process(i)
            ok = self._check(i)
            if ok:
                nsm = sm_acc
                if e.kind in SM:
                    nsm |= (1 << i) | cl
                if e.kind in ("pull", "merge"):
                    nso[slot] |= (1 << i) | cl
                npos[slot] += 1
                nstate = (npos, nso, nwu, nsm)
                if self._advance(slot, nstate):
                    found = self._dfs(placed | 1 << k, nstate,
                                      sm_order + [i] if e.kind in SM else sm_order)
                    if found is not None:
                        return found
            del self.order[mark:]
        self.failed.add(key)
        return None


def check(h: History | Iterable[Event], spec: TypeSpec | str, max_global: int = 12,
          budget: int = 2_000_000, verify: bool = True) -> Verdict:
    """Decide GLConsistency of ``h`` (per object) against ``spec``.

    Raises ``SearchBudgetExceeded`` when an object has more than
    ``max_global`` global-kind events or the search exceeds ``budget`` nodes.
    """
    if not isinstance(h, History):
        h = History(h)
    if isinstance(spec, str):
        spec = SPECS[spec]
    witness: list[Event] = []
    explored = 0
    for obj in h.objects():
        sub = h.restrict_to(obj) if len(h.objects()) > 1 else h
        n_global = sum(1 for e in sub.events if e.kind in GLOBAL_KINDS)
        if n_global > max_global:
            raise SearchBudgetExceeded(
                f"object {obj} has {n_global} global-kind events (limit {max_global})")
        search = _Search(sub, spec, budget)
        ar = search.run()
        explored += search.explored
        if ar is None:
            return Verdict(False, violation=search.first_violation, explored=explored)
        if verify:
            bad = verify_witness(sub, ar, spec)
            assert bad is None, f"search accepted a witness that fails RVal: {bad}"
        witness.extend(sub.events[i] for i in ar)
    return Verdict(True, witness=witness, explored=explored)
