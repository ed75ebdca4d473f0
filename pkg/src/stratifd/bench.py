"""Benchmark families and the measurement loop.

Instances are deterministic in (family, n): the same case always builds
the same store and constraint trees, so result rows differ between runs
only in the duration column.  Effort is compared via the propagator-run
and speculation counters, which are machine-independent; wall-clock
numbers depend on the host and are reported for orientation only.

The exact instance shapes behind the published element/lex/mulctr
curves are not known, so those families are reconstructions; the
shapes used here are chosen to exercise the same mechanisms (weak
reified gates vs constructive pruning, and depth budgets that fall one
short) and are documented per builder.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass

from .arith import Add, Const, Mul, RelOp, Sub, Var
from .constructive import Ctr, Rel, post
from .domain import IntDomain
from .engine import DeadlineExceeded, Env, Status, Store, UNBOUNDED, VarId
from .globalctr import (
    build_disjctr,
    build_domctr,
    build_elemctr,
    build_lexctr,
    build_mulctr,
)
from .reify import post_reified
from .search import label, maximize

FAMILIES = ("domain", "element", "lex", "mulctr", "disjunctive")


@dataclass(frozen=True)
class BenchCase:
    family: str
    n: int
    impl: str  # "cd", "cd(<k>)", or "reified"
    timeout: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family: {self.family}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        parse_impl(self.impl)


@dataclass(frozen=True)
class BenchRecord:
    family: str
    n: int
    impl: str
    k: str
    duration_ms: int
    prop_runs: int
    speculations: int
    outcome: str  # solved | timeout | unsat


@dataclass
class Instance:
    store: Store
    ctrs: list[Ctr]
    label_vars: list[VarId]
    objective: VarId | None = None


def parse_impl(impl: str) -> tuple[bool, "int | float"]:
    """-> (reified?, k).  Accepts "cd", "cd(<int>)", "reified"."""
    if impl == "reified":
        return True, UNBOUNDED
    if impl == "cd":
        return False, UNBOUNDED
    if impl.startswith("cd(") and impl.endswith(")"):
        k = int(impl[3:-1])
        if k < 0:
            raise ValueError("k must be >= 0")
        return False, k
    raise ValueError(f"unknown implementation: {impl}")


def impl_k_text(impl: str) -> str:
    reified, k = parse_impl(impl)
    if reified:
        return "-"
    return "inf" if k is UNBOUNDED else str(k)


# -- families ------------------------------------------------------------


def _domain(n: int) -> Instance:
    # one-hot selector over n bits with side constraint X*X < n,
    # maximizing X while labeling the bits
    store = Store()
    x = store.new_var(IntDomain.range(1, n))
    bits = [store.new_var(IntDomain.range(0, 1)) for _ in range(n)]
    ctrs = [
        build_domctr(store, x, bits),
        Rel(Mul(Var(x), Var(x)), RelOp.LT, Const(n)),
    ]
    return Instance(store, ctrs, bits, objective=x)


def _element(n: int) -> Instance:
    # two reads of parallel arrays at one shared position: cellwise the
    # first array runs strictly below the second, yet the two read
    # results are ordered the other way round, so nothing satisfies
    # both lookups.  A small depth budget refutes every index arm near
    # the root of the search; the reified gates stay mute until both
    # arrays are fully labeled, so the baseline tree is exponential in n.
    store = Store()
    i = store.new_var(IntDomain.range(1, n))
    j1 = store.new_var(IntDomain.range(0, 3))
    j2 = store.new_var(IntDomain.range(0, 3))
    cs = [store.new_var(IntDomain.range(0, 3)) for _ in range(n)]
    ds = [store.new_var(IntDomain.range(0, 3)) for _ in range(n)]
    ctrs: list[Ctr] = [Rel(Var(cs[t]), RelOp.LT, Var(ds[t])) for t in range(n)]
    ctrs.append(Rel(Var(j1), RelOp.GT, Var(j2)))
    ctrs.append(build_elemctr(store, i, cs, j1))
    ctrs.append(build_elemctr(store, i, ds, j2))
    return Instance(store, ctrs, cs + ds + [j2, j1, i])


def _lex(n: int) -> Instance:
    # reconstruction: a chain of three strictly increasing 0/1 rows
    store = Store()
    xs = [store.new_var(IntDomain.range(0, 1)) for _ in range(n)]
    ys = [store.new_var(IntDomain.range(0, 1)) for _ in range(n)]
    zs = [store.new_var(IntDomain.range(0, 1)) for _ in range(n)]
    ctrs = [build_lexctr(xs, ys), build_lexctr(ys, zs)]
    return Instance(store, ctrs, xs + ys + zs)


def _mulctr(n: int) -> Instance:
    # a three-hop chain of step windows P -> A -> B -> C, where each
    # hop constrains dst - src + 16 to a multiple of 4 in 12..24, so
    # the chain end keeps the start's residue mod 4.  Start values are
    # all = 0 mod 4, the end domain only offers = 2 mod 4: no start
    # survives.  Refuting a start value costs one speculation per hop,
    # so a depth budget of 3 clears the start column before search
    # descends; at depth 2 the last hop is out of reach, four start
    # values look viable, and each drags the search through the decoy
    # block: n/4 independent step windows around zero with two live
    # values apiece, doubling the subtree per decoy.
    m = max(2, n // 4)
    store = Store()
    p = store.new_var(IntDomain.from_values(range(-8, 13, 4)))
    a = store.new_var(IntDomain.range(0, 10))
    b = store.new_var(IntDomain.range(0, 10))
    c = store.new_var(IntDomain.from_values((2, 6, 10, 14)))
    zero = store.new_var(IntDomain.point(0))
    four = store.new_var(IntDomain.point(4))
    ctrs: list[Ctr] = []

    def hop(src: VarId, dst: VarId, lo: int, hi: int) -> None:
        t = store.new_var(IntDomain.range(lo, hi))
        ctrs.append(
            Rel(Var(t), RelOp.EQ, Add(Sub(Var(dst), Var(src)), Const(16)))
        )
        ctrs.append(build_mulctr(store, four, t, lo, hi))

    decoys = []
    for _ in range(m):
        e = store.new_var(IntDomain.range(0, 12))
        decoys.append(e)
        hop(zero, e, 16, 20)
    hop(p, a, 12, 24)
    hop(a, b, 12, 24)
    hop(b, c, 12, 24)
    return Instance(store, ctrs, [p] + decoys + [a, b, c])


def _disjunctive(n: int) -> Instance:
    # n unit tasks on one machine, horizon exactly tight
    store = Store()
    starts = [store.new_var(IntDomain.range(0, n - 1)) for _ in range(n)]
    durs = [store.new_var(IntDomain.point(1)) for _ in range(n)]
    total = sum(range(n)) + n
    ctrs = [build_disjctr(starts, durs, total)]
    return Instance(store, ctrs, starts)


_BUILDERS = {
    "domain": _domain,
    "element": _element,
    "lex": _lex,
    "mulctr": _mulctr,
    "disjunctive": _disjunctive,
}


def build_instance(family: str, n: int) -> Instance:
    if n < 1:
        raise ValueError("n must be >= 1")
    if family == "disjunctive" and n < 2:
        n = 2
    return _BUILDERS[family](n)


# -- measurement ---------------------------------------------------------


def run_case(case: BenchCase) -> BenchRecord:
    # nested speculation recurses through the propagator stack
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    reified, k = parse_impl(case.impl)
    inst = build_instance(case.family, case.n)
    start = time.monotonic()
    env = Env(k=k, deadline=start + case.timeout)
    poster = post_reified if reified else post
    outcome = "solved"
    try:
        failed = False
        for c in inst.ctrs:
            if poster(inst.store, c, env) is Status.FAIL:
                failed = True
                break
        if failed:
            outcome = "unsat"
        elif inst.objective is not None:
            best = maximize(inst.store, inst.label_vars, inst.objective, env)
            outcome = "solved" if best is not None else "unsat"
        else:
            gen = label(inst.store, inst.label_vars, env=env)
            try:
                first = next(gen, None)
            finally:
                gen.close()
            outcome = "solved" if first is not None else "unsat"
    except DeadlineExceeded:
        outcome = "timeout"
    duration_ms = int((time.monotonic() - start) * 1000)
    return BenchRecord(
        family=case.family,
        n=case.n,
        impl=case.impl,
        k=impl_k_text(case.impl),
        duration_ms=duration_ms,
        prop_runs=env.stats.prop_runs,
        speculations=env.stats.speculations,
        outcome=outcome,
    )


CSV_HEADER = "family,n,impl,k,duration_ms,prop_runs,speculations,outcome"


def record_row(r: BenchRecord) -> str:
    return (
        f"{r.family},{r.n},{r.impl},{r.k},{r.duration_ms},"
        f"{r.prop_runs},{r.speculations},{r.outcome}"
    )
