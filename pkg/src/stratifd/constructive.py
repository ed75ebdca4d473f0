"""Constructive logical operators over constraint trees.

A :class:`Ctr` is a constraint formula: relational and membership leaves
combined with conjunction, negation, disjunction (``Cd``), exclusive
disjunction (``Cxd``), implication (``Imp``), and conditional (``Ite``).

Negation never runs at solve time: :func:`nnf` rewrites it away eagerly
(De Morgan over the connectives, operator negation on relations, range
complement on memberships).

The disjunctive connectives share one filtering algorithm, implemented by
:class:`ConstructiveProp` over a pair of branches:

* speculatively propagate each branch in isolation (snapshot / propagate /
  capture / rollback);
* if both refuted: fail;  if one refuted: commit the other permanently;
* otherwise narrow every variable of the two branches to the union of the
  domains the branches produced, and stay suspended.

A branch whose variables are all instantiated is instead evaluated
directly: if it holds the operator is discharged, if not the other branch
is committed.

Speculation depth is bounded by ``env.k``: each speculation runs the
nested computation at ``k - 1``, and at ``k = 0`` the operator suspends
silently until more variables are instantiated (or labeling finishes the
job).  ``k = UNBOUNDED`` gives unrestricted speculative propagation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .arith import (
    Expr,
    RelOp,
    Var,
    eval_expr,
    expr_vars,
    negate_relop,
    post_in_range,
    post_rel,
    rel_holds,
)
from .domain import IntDomain
from .engine import (
    Env,
    Propagator,
    Status,
    Store,
    VarId,
    Wake,
    fixpoint,
    speculate,
)

# -- constraint trees ----------------------------------------------------


class Ctr:
    __slots__ = ()


@dataclass(frozen=True)
class CTrue(Ctr):
    pass


@dataclass(frozen=True)
class CFalse(Ctr):
    pass


TRUE = CTrue()
FALSE = CFalse()


@dataclass(frozen=True)
class InRange(Ctr):
    vid: VarId
    dom: IntDomain


@dataclass(frozen=True)
class Rel(Ctr):
    lhs: Expr
    op: RelOp
    rhs: Expr


@dataclass(frozen=True)
class Conj(Ctr):
    a: Ctr
    b: Ctr


@dataclass(frozen=True)
class Cn(Ctr):
    a: Ctr


@dataclass(frozen=True)
class Cd(Ctr):
    a: Ctr
    b: Ctr


@dataclass(frozen=True)
class Cxd(Ctr):
    a: Ctr
    b: Ctr


@dataclass(frozen=True)
class Imp(Ctr):
    a: Ctr
    b: Ctr


@dataclass(frozen=True)
class Ite(Ctr):
    cond: Ctr
    a: Ctr
    b: Ctr


@dataclass(frozen=True)
class Ror(Ctr):
    """Reified disjunction: propagates through truth values only."""

    a: Ctr
    b: Ctr


@dataclass(frozen=True)
class Rand(Ctr):
    """Reified conjunction."""

    a: Ctr
    b: Ctr


@dataclass(frozen=True)
class GlobalCall(Ctr):
    """Call to a named global constraint; arguments are Var nodes, ints,
    or tuples of Var nodes."""

    name: str
    args: tuple


def conj_all(cs: Iterable[Ctr]) -> Ctr:
    """Right-nested conjunction of the given constraints (TRUE if none)."""
    cs = list(cs)
    if not cs:
        return TRUE
    out = cs[-1]
    for c in reversed(cs[:-1]):
        out = Conj(c, out)
    return out


def ctr_vars(c: Ctr) -> tuple[VarId, ...]:
    """Variables of the formula in first-occurrence order."""
    out: list[VarId] = []

    def add(vid: VarId) -> None:
        if vid not in out:
            out.append(vid)

    def walk(n: Ctr) -> None:
        if isinstance(n, InRange):
            add(n.vid)
        elif isinstance(n, Rel):
            for v in expr_vars(n.lhs) + expr_vars(n.rhs):
                add(v)
        elif isinstance(n, (Conj, Cd, Cxd, Imp, Ror, Rand)):
            walk(n.a)
            walk(n.b)
        elif isinstance(n, Cn):
            walk(n.a)
        elif isinstance(n, Ite):
            walk(n.cond)
            walk(n.a)
            walk(n.b)
        elif isinstance(n, GlobalCall):
            for arg in n.args:
                if isinstance(arg, Var):
                    add(arg.vid)
                elif isinstance(arg, tuple):
                    for item in arg:
                        if isinstance(item, Var):
                            add(item.vid)

    walk(c)
    return tuple(out)


def spec_depth(c: Ctr) -> int:
    """Maximum number of speculating operators along any root-leaf path."""
    if isinstance(c, (Cd, Cxd, Imp)):
        return 1 + max(spec_depth(c.a), spec_depth(c.b))
    if isinstance(c, Ite):
        return 1 + max(spec_depth(c.cond), spec_depth(c.a), spec_depth(c.b))
    if isinstance(c, (Conj, Ror, Rand)):
        return max(spec_depth(c.a), spec_depth(c.b))
    if isinstance(c, Cn):
        return spec_depth(c.a)
    return 0


# -- negation rewriting --------------------------------------------------


def nnf(c: Ctr) -> Ctr:
    """Rewrite negations away; the result contains no Cn node.

    Variable-free relations are evaluated on the spot.
    """
    if isinstance(c, (CTrue, CFalse, InRange, GlobalCall)):
        return c
    if isinstance(c, Rel):
        if not expr_vars(c.lhs) and not expr_vars(c.rhs):
            a = eval_expr(c.lhs, None)  # type: ignore[arg-type]
            b = eval_expr(c.rhs, None)  # type: ignore[arg-type]
            return TRUE if rel_holds(c.op, a, b) else FALSE
        return c
    if isinstance(c, Conj):
        return Conj(nnf(c.a), nnf(c.b))
    if isinstance(c, Cd):
        return Cd(nnf(c.a), nnf(c.b))
    if isinstance(c, Cxd):
        return Cxd(nnf(c.a), nnf(c.b))
    if isinstance(c, Imp):
        return Imp(nnf(c.a), nnf(c.b))
    if isinstance(c, Ite):
        return Ite(nnf(c.cond), nnf(c.a), nnf(c.b))
    if isinstance(c, Ror):
        return Ror(nnf(c.a), nnf(c.b))
    if isinstance(c, Rand):
        return Rand(nnf(c.a), nnf(c.b))
    if isinstance(c, Cn):
        return _push_neg(c.a)
    raise TypeError(f"not a constraint: {c!r}")


def _push_neg(c: Ctr) -> Ctr:
    """nnf of the negation of c."""
    if isinstance(c, CTrue):
        return FALSE
    if isinstance(c, CFalse):
        return TRUE
    if isinstance(c, InRange):
        return InRange(c.vid, c.dom.complement())
    if isinstance(c, Rel):
        return nnf(Rel(c.lhs, negate_relop(c.op), c.rhs))
    if isinstance(c, Conj):
        return Cd(_push_neg(c.a), _push_neg(c.b))
    if isinstance(c, Cd):
        return Conj(_push_neg(c.a), _push_neg(c.b))
    if isinstance(c, Cxd):
        # the complement of exactly-one is both-or-neither
        return Cd(Conj(nnf(c.a), nnf(c.b)), Conj(_push_neg(c.a), _push_neg(c.b)))
    if isinstance(c, Imp):
        return Conj(nnf(c.a), _push_neg(c.b))
    if isinstance(c, Ite):
        return Conj(
            Cd(_push_neg(c.cond), _push_neg(c.a)),
            Cd(nnf(c.cond), _push_neg(c.b)),
        )
    if isinstance(c, Ror):
        return Rand(_push_neg(c.a), _push_neg(c.b))
    if isinstance(c, Rand):
        return Ror(_push_neg(c.a), _push_neg(c.b))
    if isinstance(c, Cn):
        return nnf(c.a)
    if isinstance(c, GlobalCall):
        raise ValueError(f"cannot negate global constraint {c.name}")
    raise TypeError(f"not a constraint: {c!r}")


# -- ground evaluation ---------------------------------------------------


def eval_ctr_ground(c: Ctr, store: Store) -> bool:
    """Truth of c when every variable it mentions is instantiated."""
    val = lambda vid: store.dom(vid).value()
    if isinstance(c, CTrue):
        return True
    if isinstance(c, CFalse):
        return False
    if isinstance(c, InRange):
        return val(c.vid) in c.dom
    if isinstance(c, Rel):
        return rel_holds(c.op, eval_expr(c.lhs, val), eval_expr(c.rhs, val))
    if isinstance(c, Conj):
        return eval_ctr_ground(c.a, store) and eval_ctr_ground(c.b, store)
    if isinstance(c, Cn):
        return not eval_ctr_ground(c.a, store)
    if isinstance(c, (Cd, Ror)):
        return eval_ctr_ground(c.a, store) or eval_ctr_ground(c.b, store)
    if isinstance(c, Rand):
        return eval_ctr_ground(c.a, store) and eval_ctr_ground(c.b, store)
    if isinstance(c, Cxd):
        return eval_ctr_ground(c.a, store) != eval_ctr_ground(c.b, store)
    if isinstance(c, Imp):
        return (not eval_ctr_ground(c.a, store)) or eval_ctr_ground(c.b, store)
    if isinstance(c, Ite):
        if eval_ctr_ground(c.cond, store):
            return eval_ctr_ground(c.a, store)
        return eval_ctr_ground(c.b, store)
    if isinstance(c, GlobalCall):
        from . import globalctr

        return globalctr.holds_ground(c, val)
    raise TypeError(f"not a constraint: {c!r}")


# -- the shared disjunctive propagator -----------------------------------


class ConstructiveProp(Propagator):
    """Two-branch speculative filtering (see the module docstring)."""

    __slots__ = ("b1", "b2", "v1", "v2", "allvars", "kind")

    def __init__(self, b1: Ctr, b2: Ctr, kind: str = "cd") -> None:
        super().__init__()
        self.b1 = nnf(b1)
        self.b2 = nnf(b2)
        self.v1 = ctr_vars(self.b1)
        self.v2 = ctr_vars(self.b2)
        self.allvars = tuple(dict.fromkeys(self.v1 + self.v2))
        self.kind = kind

    def subscriptions(self):
        return [(v, Wake.ANY) for v in self.allvars]

    def _ground(self, store: Store, vids) -> bool:
        return all(store.dom(v).is_singleton() for v in vids)

    def _commit(self, store: Store, env: Env, branch: Ctr) -> Status:
        """Post the surviving branch permanently; this operator is done."""
        st = _install(store, branch, env)
        return Status.FAIL if st is Status.FAIL else Status.EXIT

    def filter(self, store: Store, env: Env) -> Status:
        # instantiated branches are decided directly, at any depth
        g1 = self._ground(store, self.v1)
        g2 = self._ground(store, self.v2)
        if g1:
            if eval_ctr_ground(self.b1, store):
                return Status.EXIT
            if g2:
                return (
                    Status.EXIT
                    if eval_ctr_ground(self.b2, store)
                    else Status.FAIL
                )
            return self._commit(store, env, self.b2)
        if g2:
            if eval_ctr_ground(self.b2, store):
                return Status.EXIT
            return self._commit(store, env, self.b1)

        if env.k == 0:
            return Status.SUSPEND
        child = env.at_k(env.k - 1)
        d1, s1 = speculate(
            store, child, lambda: _install(store, self.b1, child), self.allvars
        )
        d2, s2 = speculate(
            store, child, lambda: _install(store, self.b2, child), self.allvars
        )
        if s1 is Status.FAIL and s2 is Status.FAIL:
            return Status.FAIL
        if s1 is Status.FAIL:
            return self._commit(store, env, self.b2)
        if s2 is Status.FAIL:
            return self._commit(store, env, self.b1)
        for v in self.allvars:
            if not store.set_domain(v, d1[v].union(d2[v])):
                return Status.FAIL
        return Status.SUSPEND


# -- posting -------------------------------------------------------------


def _install(store: Store, c: Ctr, env: Env) -> Status:
    """Register the propagators for c without running them to fixpoint.

    FAIL marks the store failed.
    """
    if isinstance(c, CTrue):
        return Status.EXIT
    if isinstance(c, CFalse):
        store.failed = True
        return Status.FAIL
    if isinstance(c, InRange):
        return post_in_range(store, c.vid, c.dom)
    if isinstance(c, Rel):
        st = post_rel(store, c.lhs, c.op, c.rhs)
        if st is Status.FAIL:
            store.failed = True
        return st
    if isinstance(c, Conj):
        st1 = _install(store, c.a, env)
        if st1 is Status.FAIL:
            return Status.FAIL
        st2 = _install(store, c.b, env)
        if st2 is Status.FAIL:
            return Status.FAIL
        if st1 is Status.EXIT and st2 is Status.EXIT:
            return Status.EXIT
        return Status.SUSPEND
    if isinstance(c, Cn):
        return _install(store, nnf(c), env)
    if isinstance(c, Cd):
        store.register(ConstructiveProp(c.a, c.b, "cd"))
        return Status.SUSPEND
    if isinstance(c, Cxd):
        store.register(
            ConstructiveProp(Conj(c.a, Cn(c.b)), Conj(Cn(c.a), c.b), "cxd")
        )
        return Status.SUSPEND
    if isinstance(c, Imp):
        if env.imp_conjunctive:
            store.register(ConstructiveProp(Cn(c.a), Conj(c.a, c.b), "imp"))
        else:
            store.register(ConstructiveProp(Cn(c.a), c.b, "imp"))
        return Status.SUSPEND
    if isinstance(c, Ite):
        store.register(
            ConstructiveProp(Conj(c.cond, c.a), Conj(Cn(c.cond), c.b), "ite")
        )
        return Status.SUSPEND
    if isinstance(c, (Ror, Rand)):
        from . import reify

        return reify.post_reified(store, c, env)
    if isinstance(c, GlobalCall):
        from . import globalctr

        return globalctr.install_global(store, c, env)
    raise TypeError(f"not a constraint: {c!r}")


def post(store: Store, c: Ctr, env: Env) -> Status:
    """Install c and propagate to fixpoint."""
    base = len(store.trail)
    if _install(store, c, env) is Status.FAIL:
        return Status.FAIL
    if fixpoint(store, env) is Status.FAIL:
        return Status.FAIL
    regs = [e[1] for e in store.trail[base:] if e[0] == "reg"]
    if any(p.alive for p in regs):
        return Status.SUSPEND
    return Status.EXIT


def propagate_k(
    c: Ctr, store: Store, env: Env
) -> tuple[dict[VarId, IntDomain], Status]:
    """Domains of vars(c) after filtering c against the current store,
    computed speculatively: the live store is unchanged."""
    vids = ctr_vars(c)
    return speculate(store, env, lambda: _install(store, c, env), vids)


def abs_entailed(c: Ctr, store: Store, env: Env) -> bool:
    """True when the negation of c is refuted by propagation (so c must
    hold); False means unknown."""
    neg = nnf(Cn(c))
    _, status = speculate(store, env, lambda: _install(store, neg, env), ())
    return status is Status.FAIL
