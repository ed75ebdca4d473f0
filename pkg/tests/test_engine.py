"""Store, queue, trail, and speculation mechanics with toy propagators."""

import pytest

from stratifd.domain import (
    EMPTY,
    NEG_INF,
    POS_INF,
    EmptyDomainError,
    IntDomain,
    bound_add,
    bound_sub,
)
from stratifd.engine import (
    Env,
    Propagator,
    Status,
    Store,
    Wake,
    fixpoint,
    speculate,
)


class Lt(Propagator):
    """x < y with bound reasoning; exits once entailed on bounds."""

    def __init__(self, x, y):
        super().__init__()
        self.x, self.y = x, y

    def subscriptions(self):
        return [(self.x, Wake.BOUNDS), (self.y, Wake.BOUNDS)]

    def filter(self, store, env):
        hi = bound_sub(store.dom(self.y).bounds()[1], 1)
        if not store.set_domain(self.x, IntDomain.range(NEG_INF, hi)):
            return Status.FAIL
        lo = bound_add(store.dom(self.x).bounds()[0], 1)
        if not store.set_domain(self.y, IntDomain.range(lo, POS_INF)):
            return Status.FAIL
        if store.dom(self.x).bounds()[1] < store.dom(self.y).bounds()[0]:
            return Status.EXIT
        return Status.SUSPEND


class Log(Propagator):
    """Records every run; wakes on the given class."""

    def __init__(self, var, wake):
        super().__init__()
        self.var = var
        self.wake = wake
        self.runs = 0

    def subscriptions(self):
        return [(self.var, self.wake)]

    def filter(self, store, env):
        self.runs += 1
        return Status.SUSPEND


def mkstore(n=0, lo=1, hi=10):
    s = Store()
    vs = [s.new_var(IntDomain.range(lo, hi)) for _ in range(n)]
    return s, vs


def test_new_var_rejects_empty():
    s = Store()
    with pytest.raises(EmptyDomainError):
        s.new_var(EMPTY)


def test_set_domain_intersects_and_reports_wipeout():
    s, (x,) = mkstore(1)
    assert s.set_domain(x, IntDomain.range(5, 20))
    assert s.dom(x) == IntDomain.range(5, 10)
    assert not s.set_domain(x, IntDomain.range(50, 60))
    assert s.failed and s.dom(x) == EMPTY


def test_fixpoint_empty_queue_exits():
    s, _ = mkstore(2)
    assert fixpoint(s, Env()) is Status.EXIT


def test_lt_chain_forces_assignment():
    s, (a, b, c) = mkstore(3, 1, 3)
    for p in (Lt(a, b), Lt(b, c)):
        s.register(p)
    assert fixpoint(s, Env()) is Status.EXIT
    assert [s.dom(v) for v in (a, b, c)] == [
        IntDomain.point(1),
        IntDomain.point(2),
        IntDomain.point(3),
    ]


def test_lt_cycle_fails():
    s, (a, b) = mkstore(2, 1, 3)
    s.register(Lt(a, b))
    s.register(Lt(b, a))
    assert fixpoint(s, Env()) is Status.FAIL
    assert s.failed


def test_exit_deregisters_and_skips_later_wakes():
    s, (a, b) = mkstore(2, 1, 10)
    lt = Lt(a, b)
    s.register(lt)
    s.set_domain(a, IntDomain.range(1, 3))
    s.set_domain(b, IntDomain.range(7, 10))
    assert fixpoint(s, Env()) is Status.EXIT
    assert not lt.alive
    env = Env()
    s.set_domain(b, IntDomain.range(7, 8))
    assert fixpoint(s, env) is Status.EXIT
    assert env.stats.prop_runs == 0  # dead propagator never re-queued


def test_wake_classes():
    s, (x,) = mkstore(1, 1, 10)
    any_p, bounds_p, inst_p = Log(x, Wake.ANY), Log(x, Wake.BOUNDS), Log(x, Wake.INST)
    for p in (any_p, bounds_p, inst_p):
        s.register(p)
    fixpoint(s, Env())  # initial runs
    base = [any_p.runs, bounds_p.runs, inst_p.runs]
    assert base == [1, 1, 1]

    # interior hole: any-change only
    s.set_domain(x, IntDomain.range(1, 10).without(5))
    fixpoint(s, Env())
    assert [any_p.runs, bounds_p.runs, inst_p.runs] == [2, 1, 1]

    # bound move
    s.set_domain(x, IntDomain.range(2, 10))
    fixpoint(s, Env())
    assert [any_p.runs, bounds_p.runs, inst_p.runs] == [3, 2, 1]

    # instantiation moves a bound too
    s.set_domain(x, IntDomain.point(7))
    fixpoint(s, Env())
    assert [any_p.runs, bounds_p.runs, inst_p.runs] == [4, 3, 2]


def test_snapshot_restore_bit_identical():
    s, (x, y) = mkstore(2, 1, 10)
    before = [s.dom(x), s.dom(y)]
    m = s.snapshot()
    s.set_domain(x, IntDomain.point(3))
    s.new_var(IntDomain.range(0, 5))
    s.register(Lt(x, y))
    s.restore(m)
    assert [s.dom(x), s.dom(y)] == before
    assert len(s.domains) == 2
    assert s.subscribers[x] == [] and s.subscribers[y] == []


def test_restore_clears_failure():
    s, (x,) = mkstore(1)
    m = s.snapshot()
    s.set_domain(x, IntDomain.range(99, 99))
    assert s.failed
    s.restore(m)
    assert not s.failed and s.dom(x) == IntDomain.range(1, 10)


def test_nested_snapshots_lifo_and_stale_marks():
    s, (x,) = mkstore(1)
    outer = s.snapshot()
    s.set_domain(x, IntDomain.range(1, 8))
    inner = s.snapshot()
    s.set_domain(x, IntDomain.range(1, 5))
    s.restore(inner)
    assert s.dom(x) == IntDomain.range(1, 8)
    with pytest.raises(ValueError):
        s.restore(inner)
    s.restore(outer)
    assert s.dom(x) == IntDomain.range(1, 10)

    # restoring an outer mark invalidates inner ones
    outer = s.snapshot()
    inner = s.snapshot()
    s.restore(outer)
    with pytest.raises(ValueError):
        s.restore(inner)


def test_speculation_is_transparent():
    s, (a, b) = mkstore(2, 1, 10)
    env = Env()

    def poster():
        s.register(Lt(a, b))
        s.set_domain(b, IntDomain.range(1, 4))
        return Status.SUSPEND

    doms, status = speculate(s, env, poster, [a, b])
    assert status is not Status.FAIL
    assert doms[a] == IntDomain.range(1, 3)
    assert doms[b] == IntDomain.range(2, 4)
    # live store untouched
    assert s.dom(a) == IntDomain.range(1, 10)
    assert s.dom(b) == IntDomain.range(1, 10)
    assert s.subscribers[a] == []
    assert env.stats.speculations == 1


def test_failed_speculation_reports_empty_domains():
    s, (a,) = mkstore(1)
    env = Env()

    def poster():
        s.set_domain(a, IntDomain.range(50, 60))
        return Status.SUSPEND

    doms, status = speculate(s, env, poster, [a])
    assert status is Status.FAIL
    assert doms[a] == EMPTY
    assert not s.failed and s.dom(a) == IntDomain.range(1, 10)


def test_speculation_uses_isolated_queue():
    s, (x, y) = mkstore(2, 1, 10)
    outer = Log(x, Wake.ANY)
    s.register(outer)
    fixpoint(s, Env())
    assert outer.runs == 1

    def poster():
        s.set_domain(x, IntDomain.range(1, 5))
        return Status.SUSPEND

    doms, _ = speculate(s, Env(), poster, [x])
    # the outer propagator ran inside the speculation (cross-waking), and
    # the outer queue is still empty afterwards
    assert outer.runs == 2
    assert fixpoint(s, Env()) is Status.EXIT
    assert outer.runs == 2


def test_fixpoint_is_idempotent():
    s, (a, b, c) = mkstore(3, 1, 3)
    s.register(Lt(a, b))
    s.register(Lt(b, c))
    fixpoint(s, Env())
    snap = list(s.domains)
    env = Env()
    assert fixpoint(s, env) is Status.EXIT
    assert list(s.domains) == snap
    assert env.stats.prop_runs == 0
