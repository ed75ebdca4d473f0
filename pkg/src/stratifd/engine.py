"""Propagation engine.

A :class:`Store` owns variables and their domains, a registry of posted
propagators with per-variable subscriber lists, a trail for snapshot /
restore, and a stack of FIFO propagation queues.  Propagation itself is
:func:`fixpoint`; :func:`speculate` runs a what-if propagation inside a
snapshot and hands back the domains it would produce, leaving the live
store untouched.

Everything here is single-threaded: a store may be moved between threads
but never shared.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from math import inf
from enum import Enum
from typing import Callable, Iterable

from .domain import EMPTY, EmptyDomainError, IntDomain

VarId = int

#: Propagation depth that never runs out; filters behave unrestrictedly.
UNBOUNDED = inf


class Status(Enum):
    """Outcome of one filter run (or of a whole propagation)."""

    FAIL = "fail"
    EXIT = "exit"
    SUSPEND = "suspend"


class Wake(Enum):
    """Event class that re-queues a subscribed propagator."""

    ANY = 2      # any change to the domain
    BOUNDS = 1   # min or max moved
    INST = 0     # domain became a singleton


class DeadlineExceeded(Exception):
    """Cooperative timeout, raised between propagator runs."""


@dataclass
class Stats:
    """Machine-independent effort counters."""

    prop_runs: int = 0
    speculations: int = 0
    snapshots: int = 0


@dataclass
class Env:
    """Propagation context.

    ``k`` bounds how deeply speculative filters may nest; ``UNBOUNDED``
    reproduces unrestricted speculation.  ``stats`` is shared across child
    environments so counters aggregate over a whole computation.
    """

    k: int | float = UNBOUNDED
    stats: Stats = field(default_factory=Stats)
    deadline: float | None = None
    imp_conjunctive: bool = False

    def at_k(self, k: int | float) -> "Env":
        """Child environment at depth k, sharing stats and deadline."""
        return Env(
            k=k,
            stats=self.stats,
            deadline=self.deadline,
            imp_conjunctive=self.imp_conjunctive,
        )

    def check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise DeadlineExceeded()


class Propagator:
    """Behavioral contract for filters.

    ``filter`` must only narrow domains (the store enforces this by
    intersecting every update with the current domain) and must be a no-op
    when re-run on unchanged domains.
    """

    __slots__ = ("pid", "alive", "subs")

    def __init__(self) -> None:
        self.pid = -1
        self.alive = False
        self.subs: tuple[tuple[VarId, Wake], ...] = ()

    def subscriptions(self) -> Iterable[tuple[VarId, Wake]]:
        raise NotImplementedError

    def filter(self, store: "Store", env: Env) -> Status:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} #{self.pid}>"


@dataclass(frozen=True)
class Mark:
    trail_len: int
    nvars: int
    failed: bool
    serial: int


class Store:
    """Variables, domains, subscribers, trail, and the queue stack."""

    def __init__(self) -> None:
        self.domains: list[IntDomain] = []
        self.subscribers: list[list[tuple[Propagator, Wake]]] = []
        self.trail: list[tuple] = []
        self.failed = False
        self._marks: list[Mark] = []
        self._queues: list[tuple[deque[Propagator], set[Propagator]]] = [
            (deque(), set())
        ]
        self._next_pid = 0
        self._next_serial = 0

    # -- variables -------------------------------------------------------

    def new_var(self, initial: IntDomain) -> VarId:
        if initial.is_empty():
            raise EmptyDomainError("variable with empty initial domain")
        vid = len(self.domains)
        self.domains.append(initial)
        self.subscribers.append([])
        return vid

    def dom(self, vid: VarId) -> IntDomain:
        return self.domains[vid]

    def set_domain(self, vid: VarId, allowed: IntDomain) -> bool:
        """Narrow vid to its intersection with ``allowed``.

        Returns False on wipeout (and marks the store failed).  Any real
        change wakes matching subscribers, including the running propagator.
        """
        old = self.domains[vid]
        new = old.intersect(allowed)
        if new == old:
            return True
        self.trail.append(("dom", vid, old))
        self.domains[vid] = new
        if new.is_empty():
            self.failed = True
            return False
        self._wake(vid, old, new)
        return True

    def _wake(self, vid: VarId, old: IntDomain, new: IntDomain) -> None:
        subs = self.subscribers[vid]
        if not subs:
            return
        inst = new.is_singleton()
        bounds_moved = old.bounds() != new.bounds()
        for prop, wake in subs:
            if not prop.alive:
                continue
            if (
                wake is Wake.ANY
                or (wake is Wake.BOUNDS and bounds_moved)
                or (wake is Wake.INST and inst)
            ):
                self.enqueue(prop)

    # -- propagator registry ---------------------------------------------

    def register(self, prop: Propagator) -> None:
        """Subscribe a propagator and queue it for its first run."""
        prop.pid = self._next_pid
        self._next_pid += 1
        # one subscription per variable, keeping the most sensitive class
        wanted: dict[VarId, Wake] = {}
        for vid, wake in prop.subscriptions():
            cur = wanted.get(vid)
            if cur is None or wake.value > cur.value:
                wanted[vid] = wake
        prop.subs = tuple(wanted.items())
        for vid, wake in prop.subs:
            self.subscribers[vid].append((prop, wake))
        prop.alive = True
        self.trail.append(("reg", prop))
        self.enqueue(prop)

    def deregister(self, prop: Propagator) -> None:
        """Retire a propagator (Exit).  Subscriber entries are skipped lazily."""
        if prop.alive:
            prop.alive = False
            self.trail.append(("unreg", prop))

    # -- queue stack -----------------------------------------------------

    def enqueue(self, prop: Propagator) -> None:
        dq, members = self._queues[-1]
        if prop.alive and prop not in members:
            dq.append(prop)
            members.add(prop)

    def push_queue(self) -> None:
        self._queues.append((deque(), set()))

    def pop_queue(self) -> None:
        if len(self._queues) == 1:
            raise ValueError("cannot pop the root queue")
        self._queues.pop()

    def clear_queue(self) -> None:
        dq, members = self._queues[-1]
        dq.clear()
        members.clear()

    # -- trail -----------------------------------------------------------

    def snapshot(self) -> Mark:
        mark = Mark(len(self.trail), len(self.domains), self.failed, self._next_serial)
        self._next_serial += 1
        self._marks.append(mark)
        return mark

    def restore(self, mark: Mark) -> None:
        """Rewind to ``mark``; marks taken after it become stale."""
        if not any(m is mark for m in self._marks):
            raise ValueError("stale or foreign mark")
        while self._marks[-1] is not mark:
            self._marks.pop()
        self._marks.pop()
        while len(self.trail) > mark.trail_len:
            entry = self.trail.pop()
            tag = entry[0]
            if tag == "dom":
                self.domains[entry[1]] = entry[2]
            elif tag == "reg":
                prop = entry[1]
                for vid, _ in reversed(prop.subs):
                    pair = self.subscribers[vid].pop()
                    assert pair[0] is prop
                prop.alive = False
            else:  # unreg
                entry[1].alive = True
        del self.domains[mark.nvars:]
        del self.subscribers[mark.nvars:]
        self.failed = mark.failed


def fixpoint(store: Store, env: Env) -> Status:
    """Run queued propagators until quiescence or failure."""
    if store.failed:
        store.clear_queue()
        return Status.FAIL
    dq, members = store._queues[-1]
    while dq:
        env.check_deadline()
        prop = dq.popleft()
        members.discard(prop)
        if not prop.alive:
            continue
        env.stats.prop_runs += 1
        status = prop.filter(store, env)
        if status is Status.FAIL:
            store.failed = True
            store.clear_queue()
            return Status.FAIL
        if status is Status.EXIT:
            store.deregister(prop)
    return Status.EXIT


def speculate(
    store: Store,
    env: Env,
    poster: Callable[[], Status],
    capture: Iterable[VarId],
) -> tuple[dict[VarId, IntDomain], Status]:
    """What-if propagation.

    Inside a snapshot and a fresh queue: run ``poster`` (which registers
    constraints), propagate to fixpoint, record the domains of ``capture``,
    then restore.  The live store is unchanged afterwards; a failed
    speculation reports empty captured domains.
    """
    capture = tuple(capture)
    env.stats.speculations += 1
    env.stats.snapshots += 1
    mark = store.snapshot()
    store.push_queue()
    try:
        status = poster()
        if status is not Status.FAIL:
            status = fixpoint(store, env)
        if status is Status.FAIL:
            out = {vid: EMPTY for vid in capture}
        else:
            out = {vid: store.domains[vid] for vid in capture}
    finally:
        store.pop_queue()
        store.restore(mark)
    return out, status
