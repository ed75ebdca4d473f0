"""Reified logical connectives: the non-constructive baseline.

Each elementary constraint gets a 0/1 truth variable channelled to it,
and the connectives propagate over those truth variables only.  Nothing
here ever unions operand domains across disjuncts, which is exactly why
this baseline deduces less than the constructive operators: a
disjunction prunes only once all but one disjunct is refuted outright.

Truth is detected with two entailment tests: exact enumeration of the
Cartesian product of the operand domains while it is small (at most
``ENTAIL_CAP`` tuples), and an interval relaxation over the domain hulls
beyond that.
"""

from __future__ import annotations

from enum import Enum
from itertools import product

from .arith import (
    Add,
    Const,
    RelOp,
    Sub,
    Var,
    eval_bounds,
    eval_expr,
    expr_vars,
    negate_relop,
    post_in_range,
    post_incr,
    post_rel,
    post_sum,
    rel_holds,
)
from .constructive import (
    CFalse,
    CTrue,
    Cd,
    Cn,
    Conj,
    Ctr,
    Cxd,
    GlobalCall,
    Imp,
    InRange,
    Ite,
    Rand,
    Rel,
    Ror,
    nnf,
)
from .domain import IntDomain
from .engine import Env, Propagator, Status, Store, VarId, Wake

ENTAIL_CAP = 4096

# a truth variable is an ordinary variable whose domain stays within 0..1
BoolVar = VarId
BOOL = IntDomain.range(0, 1)


def new_bool(store: Store) -> BoolVar:
    return store.new_var(BOOL)


class Entail(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


# -- entailment tests ----------------------------------------------------


def _rel_sign(op: RelOp, lo, hi) -> Entail:
    """Classify ``lhs - rhs`` enclosed in lo..hi against op <op> 0."""
    if op is RelOp.EQ:
        if lo == 0 and hi == 0:
            return Entail.YES
        if hi < 0 or lo > 0:
            return Entail.NO
    elif op is RelOp.NE:
        if hi < 0 or lo > 0:
            return Entail.YES
        if lo == 0 and hi == 0:
            return Entail.NO
    elif op is RelOp.LT:
        if hi < 0:
            return Entail.YES
        if lo >= 0:
            return Entail.NO
    elif op is RelOp.LE:
        if hi <= 0:
            return Entail.YES
        if lo > 0:
            return Entail.NO
    elif op is RelOp.GT:
        if lo > 0:
            return Entail.YES
        if hi <= 0:
            return Entail.NO
    elif op is RelOp.GE:
        if lo >= 0:
            return Entail.YES
        if hi < 0:
            return Entail.NO
    return Entail.UNKNOWN


def interval_entailed(c: Ctr, store: Store) -> Entail:
    """Entailment over the interval hulls of the operand domains.

    YES and NO are sound; UNKNOWN is the fallback whenever interval
    arithmetic cannot decide (including correlated occurrences such as
    X - X, where the enclosure is wider than the true range).
    """
    if isinstance(c, Rel):
        lo, hi = eval_bounds(Sub(c.lhs, c.rhs), store)
        return _rel_sign(c.op, lo, hi)
    if isinstance(c, InRange):
        d = store.dom(c.vid)
        lo, hi = d.bounds()
        hull = IntDomain.range(lo, hi)
        if hull.intersect(c.dom) == hull:
            return Entail.YES
        if hull.intersect(c.dom).is_empty():
            return Entail.NO
        return Entail.UNKNOWN
    raise TypeError(f"not an elementary constraint: {c!r}")


def domain_entailed(c: Ctr, store: Store) -> Entail:
    """Entailment over the exact operand domains.

    Decided by enumeration while the product of the domain sizes stays
    within ENTAIL_CAP; beyond that (or with an unbounded operand) the
    interval relaxation answers instead.
    """
    if isinstance(c, InRange):
        # membership is decidable directly at any size
        d = store.dom(c.vid)
        if d.intersect(c.dom) == d:
            return Entail.YES
        if d.intersect(c.dom).is_empty():
            return Entail.NO
        return Entail.UNKNOWN
    if not isinstance(c, Rel):
        raise TypeError(f"not an elementary constraint: {c!r}")
    vids = tuple(dict.fromkeys(expr_vars(c.lhs) + expr_vars(c.rhs)))
    if not vids:
        a = eval_expr(c.lhs, None)  # type: ignore[arg-type]
        b = eval_expr(c.rhs, None)  # type: ignore[arg-type]
        return Entail.YES if rel_holds(c.op, a, b) else Entail.NO
    doms = [store.dom(v) for v in vids]
    count = 1
    for d in doms:
        size = d.size()
        if not isinstance(size, int):
            return interval_entailed(c, store)
        count *= size
        if count > ENTAIL_CAP:
            return interval_entailed(c, store)
    seen_true = seen_false = False
    for combo in product(*(list(d.values()) for d in doms)):
        point = dict(zip(vids, combo))
        val = point.__getitem__
        if rel_holds(c.op, eval_expr(c.lhs, val), eval_expr(c.rhs, val)):
            seen_true = True
        else:
            seen_false = True
        if seen_true and seen_false:
            return Entail.UNKNOWN
    return Entail.YES if seen_true else Entail.NO


# -- truth-variable channelling ------------------------------------------


def _negated(c: Ctr) -> Ctr:
    if isinstance(c, Rel):
        return Rel(c.lhs, negate_relop(c.op), c.rhs)
    if isinstance(c, InRange):
        return InRange(c.vid, c.dom.complement())
    raise TypeError(f"not an elementary constraint: {c!r}")


def _post_elem(store: Store, c: Ctr) -> Status:
    if isinstance(c, Rel):
        return post_rel(store, c.lhs, c.op, c.rhs)
    if isinstance(c, InRange):
        return post_in_range(store, c.vid, c.dom)
    raise TypeError(f"not an elementary constraint: {c!r}")


def _elem_vids(c: Ctr) -> tuple[VarId, ...]:
    if isinstance(c, Rel):
        return tuple(dict.fromkeys(expr_vars(c.lhs) + expr_vars(c.rhs)))
    if isinstance(c, InRange):
        return (c.vid,)
    raise TypeError(f"not an elementary constraint: {c!r}")


class ReifyProp(Propagator):
    """Channel b <-> c for an elementary constraint c.

    b bound posts c (or its negation); c entailed or refuted binds b.
    """

    __slots__ = ("c", "b")

    def __init__(self, c: Ctr, b: BoolVar) -> None:
        super().__init__()
        self.c = c
        self.b = b

    def subscriptions(self):
        return [(v, Wake.ANY) for v in _elem_vids(self.c)] + [
            (self.b, Wake.ANY)
        ]

    def filter(self, store: Store, env: Env) -> Status:
        db = store.dom(self.b)
        if db.is_singleton():
            target = self.c if db.value() == 1 else _negated(self.c)
            st = _post_elem(store, target)
            return Status.FAIL if st is Status.FAIL else Status.EXIT
        ent = domain_entailed(self.c, store)
        if ent is Entail.UNKNOWN:
            return Status.SUSPEND
        truth = 1 if ent is Entail.YES else 0
        if not store.set_domain(self.b, IntDomain.point(truth)):
            return Status.FAIL
        return Status.EXIT


def reify(store: Store, c: Ctr, b: BoolVar) -> Status:
    """Attach a truth variable to an elementary constraint."""
    store.register(ReifyProp(c, b))
    return Status.SUSPEND


# -- clause propagation over truth variables -----------------------------


def _truth(store: Store, b: BoolVar) -> int | None:
    d = store.dom(b)
    return d.value() if d.is_singleton() else None


class ClauseProp(Propagator):
    """At least one of the truth variables is 1 (unit propagation)."""

    __slots__ = ("bs",)

    def __init__(self, bs: list[BoolVar]) -> None:
        super().__init__()
        self.bs = tuple(bs)

    def subscriptions(self):
        return [(b, Wake.ANY) for b in self.bs]

    def filter(self, store: Store, env: Env) -> Status:
        open_bs = []
        for b in self.bs:
            t = _truth(store, b)
            if t == 1:
                return Status.EXIT
            if t is None:
                open_bs.append(b)
        if not open_bs:
            return Status.FAIL
        if len(open_bs) == 1:
            if not store.set_domain(open_bs[0], IntDomain.point(1)):
                return Status.FAIL
            return Status.EXIT
        return Status.SUSPEND


class NotProp(Propagator):
    """b2 = 1 - b1."""

    __slots__ = ("b1", "b2")

    def __init__(self, b1: BoolVar, b2: BoolVar) -> None:
        super().__init__()
        self.b1 = b1
        self.b2 = b2

    def subscriptions(self):
        return [(self.b1, Wake.ANY), (self.b2, Wake.ANY)]

    def filter(self, store: Store, env: Env) -> Status:
        t1 = _truth(store, self.b1)
        if t1 is not None:
            if not store.set_domain(self.b2, IntDomain.point(1 - t1)):
                return Status.FAIL
            return Status.EXIT
        t2 = _truth(store, self.b2)
        if t2 is not None:
            if not store.set_domain(self.b1, IntDomain.point(1 - t2)):
                return Status.FAIL
            return Status.EXIT
        return Status.SUSPEND


class OrGateProp(Propagator):
    """out <-> (b1 or ... or bn)."""

    __slots__ = ("out", "ins")

    def __init__(self, out: BoolVar, ins: list[BoolVar]) -> None:
        super().__init__()
        self.out = out
        self.ins = tuple(ins)

    def subscriptions(self):
        return [(b, Wake.ANY) for b in (self.out,) + self.ins]

    def filter(self, store: Store, env: Env) -> Status:
        truths = [_truth(store, b) for b in self.ins]
        if any(t == 1 for t in truths):
            if not store.set_domain(self.out, IntDomain.point(1)):
                return Status.FAIL
            return Status.EXIT
        if all(t == 0 for t in truths):
            if not store.set_domain(self.out, IntDomain.point(0)):
                return Status.FAIL
            return Status.EXIT
        t_out = _truth(store, self.out)
        if t_out == 0:
            for b in self.ins:
                if not store.set_domain(b, IntDomain.point(0)):
                    return Status.FAIL
            return Status.EXIT
        if t_out == 1:
            open_bs = [b for b, t in zip(self.ins, truths) if t is None]
            if len(open_bs) == 1:
                if not store.set_domain(open_bs[0], IntDomain.point(1)):
                    return Status.FAIL
                return Status.EXIT
        return Status.SUSPEND


class AndGateProp(Propagator):
    """out <-> (b1 and ... and bn)."""

    __slots__ = ("out", "ins")

    def __init__(self, out: BoolVar, ins: list[BoolVar]) -> None:
        super().__init__()
        self.out = out
        self.ins = tuple(ins)

    def subscriptions(self):
        return [(b, Wake.ANY) for b in (self.out,) + self.ins]

    def filter(self, store: Store, env: Env) -> Status:
        truths = [_truth(store, b) for b in self.ins]
        if any(t == 0 for t in truths):
            if not store.set_domain(self.out, IntDomain.point(0)):
                return Status.FAIL
            return Status.EXIT
        if all(t == 1 for t in truths):
            if not store.set_domain(self.out, IntDomain.point(1)):
                return Status.FAIL
            return Status.EXIT
        t_out = _truth(store, self.out)
        if t_out == 1:
            for b in self.ins:
                if not store.set_domain(b, IntDomain.point(1)):
                    return Status.FAIL
            return Status.EXIT
        if t_out == 0:
            open_bs = [b for b, t in zip(self.ins, truths) if t is None]
            if len(open_bs) == 1:
                if not store.set_domain(open_bs[0], IntDomain.point(0)):
                    return Status.FAIL
                return Status.EXIT
        return Status.SUSPEND


def post_or(store: Store, bs: list[BoolVar]) -> Status:
    """Require at least one truth variable to be 1."""
    if not bs:
        store.failed = True
        return Status.FAIL
    store.register(ClauseProp(bs))
    return Status.SUSPEND


def post_and(store: Store, bs: list[BoolVar]) -> Status:
    """Require every truth variable to be 1."""
    for b in bs:
        if not store.set_domain(b, IntDomain.point(1)):
            store.failed = True
            return Status.FAIL
    return Status.EXIT


def post_not(store: Store, b1: BoolVar, b2: BoolVar) -> Status:
    """Channel b2 = 1 - b1."""
    store.register(NotProp(b1, b2))
    return Status.SUSPEND


# -- whole-formula translation -------------------------------------------


def _flatten(c: Ctr, kind: "type | tuple[type, ...]") -> list[Ctr]:
    if isinstance(c, kind):
        return _flatten(c.a, kind) + _flatten(c.b, kind)
    return [c]


def _reify_tree(store: Store, c: Ctr, env: Env) -> BoolVar:
    """Truth variable for a connective subtree."""
    if isinstance(c, CTrue):
        return store.new_var(IntDomain.point(1))
    if isinstance(c, CFalse):
        return store.new_var(IntDomain.point(0))
    if isinstance(c, (Rel, InRange)):
        b = new_bool(store)
        reify(store, c, b)
        return b
    if isinstance(c, (Ror, Cd)):
        ins = [_reify_tree(store, d, env) for d in _flatten(c, (Ror, Cd))]
        out = new_bool(store)
        store.register(OrGateProp(out, ins))
        return out
    if isinstance(c, (Conj, Rand)):
        ins = [_reify_tree(store, d, env) for d in _flatten(c, (Conj, Rand))]
        out = new_bool(store)
        store.register(AndGateProp(out, ins))
        return out
    raise TypeError(f"no reified form for {type(c).__name__}")


def post_reified(store: Store, c: Ctr, env: Env) -> Status:
    """Install the truth-variable form of a connective formula.

    Constructive operators are first mapped onto or/and/not shape and
    negation is pushed onto the leaves.  Top-level conjuncts are posted
    directly; each disjunction becomes a clause over the truth variables
    of its (reified) disjuncts.
    """
    return _install_reified(store, nnf(to_reified(c)), env)


def _install_reified(store: Store, c: Ctr, env: Env) -> Status:
    if isinstance(c, CTrue):
        return Status.EXIT
    if isinstance(c, CFalse):
        store.failed = True
        return Status.FAIL
    if isinstance(c, (Rel, InRange)):
        st = _post_elem(store, c)
        if st is Status.FAIL:
            store.failed = True
        return st
    if isinstance(c, (Conj, Rand)):
        for part in _flatten(c, (Conj, Rand)):
            if _install_reified(store, part, env) is Status.FAIL:
                return Status.FAIL
        return Status.SUSPEND
    if isinstance(c, (Ror, Cd)):
        bs = [_reify_tree(store, d, env) for d in _flatten(c, (Ror, Cd))]
        return post_or(store, bs)
    if isinstance(c, GlobalCall):
        if c.name == "incr":
            x, y = c.args
            return post_incr(store, x.vid, y.vid)
        if c.name == "sum":
            vs, op, total = c.args
            return post_sum(store, [v.vid for v in vs], op, total)
        raise TypeError(f"global {c.name} has no reified form; unfold it first")
    raise TypeError(f"no reified form for {type(c).__name__}")


def to_reified(c: Ctr) -> Ctr:
    """Map constructive connectives onto their reified counterparts.

    cd becomes #\\/, the other operators are expanded through their
    boolean definitions, and the incr indexical becomes its defining
    relation.  The result propagates through truth variables only, which
    makes it the baseline for measuring what the constructive operators
    add.
    """
    if isinstance(c, (CTrue, CFalse, Rel, InRange)):
        return c
    if isinstance(c, Conj):
        return Conj(to_reified(c.a), to_reified(c.b))
    if isinstance(c, Cn):
        return Cn(to_reified(c.a))
    if isinstance(c, (Cd, Ror)):
        return Ror(to_reified(c.a), to_reified(c.b))
    if isinstance(c, Rand):
        return Rand(to_reified(c.a), to_reified(c.b))
    if isinstance(c, Cxd):
        a, b = to_reified(c.a), to_reified(c.b)
        return Ror(Rand(a, Cn(b)), Rand(Cn(a), b))
    if isinstance(c, Imp):
        return Ror(Cn(to_reified(c.a)), to_reified(c.b))
    if isinstance(c, Ite):
        cond = to_reified(c.cond)
        return Rand(
            Ror(Cn(cond), to_reified(c.a)), Ror(cond, to_reified(c.b))
        )
    if isinstance(c, GlobalCall):
        if c.name == "incr":
            x, y = c.args
            return Rel(Var(x.vid), RelOp.EQ, Add(Var(y.vid), Const(1)))
        if c.name == "sum":
            return c
        raise ValueError(f"global {c.name} has no reified form; unfold it first")
    raise TypeError(f"not a constraint: {c!r}")
