"""Arithmetic expressions and their propagators.

Expressions are small immutable trees over integer variables.  Relational
constraints get bound-consistent filtering: an interval forward/backward
pass over the expression tree, followed (on small domains) by a support
check that shaves unsupported bound values.  ``incr`` is the
domain-consistent X = Y + 1 constraint; ``sum`` is a linear aggregate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable

from .domain import (
    FULL,
    NEG_INF,
    POS_INF,
    Bound,
    IntDomain,
    _Inf,
    bound_add,
    bound_mul,
    bound_sub,
)
from .engine import Env, Propagator, Status, Store, VarId, Wake

# -- expression trees ----------------------------------------------------


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __neg__(self):
        return Neg(self)

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return Sub(as_expr(other), self)


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    vid: VarId


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, int):
        return Const(x)
    raise TypeError(f"not an expression: {x!r}")


def expr_vars(e: Expr) -> tuple[VarId, ...]:
    """Variables of e in first-occurrence order, without duplicates."""
    out: list[VarId] = []

    def walk(n: Expr) -> None:
        if isinstance(n, Var):
            if n.vid not in out:
                out.append(n.vid)
        elif isinstance(n, (Add, Sub, Mul)):
            walk(n.a)
            walk(n.b)
        elif isinstance(n, Neg):
            walk(n.a)

    walk(e)
    return tuple(out)


def eval_expr(e: Expr, val: Callable[[VarId], int]) -> int:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return val(e.vid)
    if isinstance(e, Add):
        return eval_expr(e.a, val) + eval_expr(e.b, val)
    if isinstance(e, Sub):
        return eval_expr(e.a, val) - eval_expr(e.b, val)
    if isinstance(e, Mul):
        return eval_expr(e.a, val) * eval_expr(e.b, val)
    if isinstance(e, Neg):
        return -eval_expr(e.a, val)
    raise TypeError(f"not an expression: {e!r}")


def eval_bounds(e: Expr, store: Store) -> tuple[Bound, Bound]:
    """Sound interval enclosure of e under the current domains."""
    if isinstance(e, Const):
        return e.value, e.value
    if isinstance(e, Var):
        return store.dom(e.vid).bounds()
    if isinstance(e, Add):
        al, ah = eval_bounds(e.a, store)
        bl, bh = eval_bounds(e.b, store)
        return bound_add(al, bl), bound_add(ah, bh)
    if isinstance(e, Sub):
        al, ah = eval_bounds(e.a, store)
        bl, bh = eval_bounds(e.b, store)
        return bound_sub(al, bh), bound_sub(ah, bl)
    if isinstance(e, Mul):
        al, ah = eval_bounds(e.a, store)
        bl, bh = eval_bounds(e.b, store)
        corners = [
            bound_mul(al, bl),
            bound_mul(al, bh),
            bound_mul(ah, bl),
            bound_mul(ah, bh),
        ]
        return min(corners), max(corners)
    if isinstance(e, Neg):
        al, ah = eval_bounds(e.a, store)
        return -ah, -al
    raise TypeError(f"not an expression: {e!r}")


# -- relational operators ------------------------------------------------


class RelOp(Enum):
    EQ = "#="
    NE = "#\\="
    LT = "#<"
    LE = "#=<"
    GT = "#>"
    GE = "#>="


_NEGATION = {
    RelOp.EQ: RelOp.NE,
    RelOp.NE: RelOp.EQ,
    RelOp.LT: RelOp.GE,
    RelOp.GE: RelOp.LT,
    RelOp.LE: RelOp.GT,
    RelOp.GT: RelOp.LE,
}


def negate_relop(op: RelOp) -> RelOp:
    return _NEGATION[op]


def rel_holds(op: RelOp, a: int, b: int) -> bool:
    if op is RelOp.EQ:
        return a == b
    if op is RelOp.NE:
        return a != b
    if op is RelOp.LT:
        return a < b
    if op is RelOp.LE:
        return a <= b
    if op is RelOp.GT:
        return a > b
    return a >= b


# swap sides so GT/GE never need their own narrowing code
def _flip(op: RelOp) -> RelOp:
    return {RelOp.GT: RelOp.LT, RelOp.GE: RelOp.LE}.get(op, op)


# -- interval division helpers ------------------------------------------


def _ceil_div(t: int, d: int) -> int:
    return -((-t) // d)


def _corner(t: Bound, d: Bound):
    """Exact value of t/d at a box corner; d is never zero."""
    if isinstance(t, _Inf):
        positive = (t is POS_INF) == (d > 0)
        return POS_INF if positive else NEG_INF
    if isinstance(d, _Inf):
        return Fraction(0)  # limit of t/d
    return Fraction(t, d)


def _quot_hull(tl: Bound, th: Bound, dl: Bound, dh: Bound) -> tuple[Bound, Bound]:
    """Integer hull of { x : some d in dl..dh, x*d in tl..th }, d of one sign."""
    lo_inf = hi_inf = False
    finite: list[Fraction] = []
    for d in (dl, dh):
        for t in (tl, th):
            q = _corner(t, d)
            if q is POS_INF:
                hi_inf = True
            elif q is NEG_INF:
                lo_inf = True
            else:
                finite.append(q)
    lo: Bound = NEG_INF if lo_inf else math.ceil(min(finite))
    hi: Bound = POS_INF if hi_inf else math.floor(max(finite))
    return lo, hi


def _div_hull(
    tl: Bound, th: Bound, dl: Bound, dh: Bound
) -> tuple[Bound, Bound] | None:
    """Backward bound for one factor of a product in tl..th, other factor
    in dl..dh.  None means the target imposes no bound; an inverted pair
    means no value works."""
    if dl == 0 and dh == 0:
        return None if tl <= 0 <= th else (1, 0)
    if dl <= 0 <= dh:
        if tl <= 0 <= th:
            return None  # d = 0 already satisfies the target
        parts = []
        if dh > 0:
            parts.append(_quot_hull(tl, th, 1, dh))
        if dl < 0:
            parts.append(_quot_hull(tl, th, dl, -1))
        lo = min(p[0] for p in parts)
        hi = max(p[1] for p in parts)
        return lo, hi
    return _quot_hull(tl, th, dl, dh)


# -- the relational propagator ------------------------------------------

# support refinement only runs when the search space is this small
_REFINE_BOX = 1024
_REFINE_SCAN = 4096
_REFINE_BUDGET = 32768


class RelProp(Propagator):
    """Bound-consistent lhs RelOp rhs over expression trees."""

    __slots__ = ("lhs", "op", "rhs", "vars_")

    def __init__(self, lhs: Expr, op: RelOp, rhs: Expr) -> None:
        super().__init__()
        if op in (RelOp.GT, RelOp.GE):
            lhs, rhs, op = rhs, lhs, _flip(op)
        self.lhs = lhs
        self.op = op
        self.rhs = rhs
        self.vars_ = tuple(dict.fromkeys(expr_vars(lhs) + expr_vars(rhs)))

    def subscriptions(self):
        return [(v, Wake.BOUNDS) for v in self.vars_]

    # backward pass: constrain e to lie in lo..hi
    def _narrow(self, store: Store, e: Expr, lo: Bound, hi: Bound) -> bool:
        if isinstance(e, Const):
            return lo <= e.value <= hi
        if isinstance(e, Var):
            return store.set_domain(e.vid, IntDomain.range(lo, hi))
        if isinstance(e, Add):
            al, ah = eval_bounds(e.a, store)
            bl, bh = eval_bounds(e.b, store)
            return self._narrow(
                store, e.a, bound_sub(lo, bh), bound_sub(hi, bl)
            ) and self._narrow(store, e.b, bound_sub(lo, ah), bound_sub(hi, al))
        if isinstance(e, Sub):
            al, ah = eval_bounds(e.a, store)
            bl, bh = eval_bounds(e.b, store)
            return self._narrow(
                store, e.a, bound_add(lo, bl), bound_add(hi, bh)
            ) and self._narrow(store, e.b, bound_sub(al, hi), bound_sub(ah, lo))
        if isinstance(e, Neg):
            return self._narrow(store, e.a, -hi, -lo)
        if isinstance(e, Mul):
            if (
                isinstance(e.a, Var)
                and isinstance(e.b, Var)
                and e.a.vid == e.b.vid
            ):
                return self._narrow_square(store, e.a.vid, lo, hi)
            al, ah = eval_bounds(e.a, store)
            bl, bh = eval_bounds(e.b, store)
            for child, odl, odh in ((e.a, bl, bh), (e.b, al, ah)):
                r = _div_hull(lo, hi, odl, odh)
                if r is not None and not self._narrow(store, child, r[0], r[1]):
                    return False
            return True
        raise TypeError(f"not an expression: {e!r}")

    def _narrow_square(self, store: Store, vid: VarId, lo: Bound, hi: Bound) -> bool:
        # x*x in lo..hi
        if isinstance(hi, int):
            if hi < 0:
                return store.set_domain(vid, IntDomain())
            s = math.isqrt(hi)
            if not store.set_domain(vid, IntDomain.range(-s, s)):
                return False
        if isinstance(lo, int) and lo > 0:
            c = math.isqrt(lo - 1) + 1  # smallest c with c*c >= lo
            ok = IntDomain(((NEG_INF, -c), (c, POS_INF)))
            return store.set_domain(vid, ok)
        return True

    def _ground_eval(self, store: Store) -> bool:
        val = lambda vid: store.dom(vid).value()
        return rel_holds(self.op, eval_expr(self.lhs, val), eval_expr(self.rhs, val))

    def filter(self, store: Store, env: Env) -> Status:
        if all(store.dom(v).is_singleton() for v in self.vars_):
            return Status.EXIT if self._ground_eval(store) else Status.FAIL

        ll, lh = eval_bounds(self.lhs, store)
        rl, rh = eval_bounds(self.rhs, store)
        op = self.op

        if op is RelOp.EQ:
            lo, hi = max(ll, rl), min(lh, rh)
            if lo > hi:
                return Status.FAIL
            if not self._narrow(store, self.lhs, lo, hi):
                return Status.FAIL
            if not self._narrow(store, self.rhs, lo, hi):
                return Status.FAIL
        elif op is RelOp.LE:
            if ll > rh:
                return Status.FAIL
            if lh <= rl:
                return Status.EXIT
            if not self._narrow(store, self.lhs, NEG_INF, rh):
                return Status.FAIL
            if not self._narrow(store, self.rhs, ll, POS_INF):
                return Status.FAIL
        elif op is RelOp.LT:
            if ll >= rh:
                return Status.FAIL
            if lh < rl:
                return Status.EXIT
            if not self._narrow(store, self.lhs, NEG_INF, bound_sub(rh, 1)):
                return Status.FAIL
            if not self._narrow(store, self.rhs, bound_add(ll, 1), POS_INF):
                return Status.FAIL
        else:  # NE
            if lh < rl or rh < ll:
                return Status.EXIT
            if ll == lh == rl == rh:
                return Status.FAIL
            # one ground side prunes a bare variable on the other
            if rl == rh and isinstance(self.lhs, Var) and isinstance(rl, int):
                if not store.set_domain(self.lhs.vid, FULL.without(rl)):
                    return Status.FAIL
            if ll == lh and isinstance(self.rhs, Var) and isinstance(ll, int):
                if not store.set_domain(self.rhs.vid, FULL.without(ll)):
                    return Status.FAIL

        if not self._refine_supports(store):
            return Status.FAIL
        return Status.SUSPEND

    # shave bound values that no hull assignment of the other variables
    # can support; only attempted on small boxes
    def _refine_supports(self, store: Store) -> bool:
        budget = _REFINE_BUDGET
        for v in self.vars_:
            others = [u for u in self.vars_ if u != v]
            box = 1
            ranges = []
            for u in others:
                du = store.dom(u)
                if not du.is_finite():
                    box = None
                    break
                lo, hi = du.bounds()
                box *= hi - lo + 1
                if box > _REFINE_BOX:
                    break
                ranges.append(range(lo, hi + 1))
            if box is None or box > _REFINE_BOX:
                continue
            dv = store.dom(v)
            if not dv.is_finite() or dv.size() > _REFINE_SCAN:
                continue
            vals = list(dv.values())
            lo_ok = hi_ok = None
            for val in vals:
                cost = max(box, 1)
                if budget < cost:
                    lo_ok = val  # out of budget: keep bound as-is
                    break
                budget -= cost
                if self._supported(store, v, val, others, ranges):
                    lo_ok = val
                    break
            if lo_ok is None:
                return False  # no value of v is supported at all
            for val in reversed(vals):
                if val < lo_ok:
                    break
                cost = max(box, 1)
                if budget < cost:
                    hi_ok = val
                    break
                budget -= cost
                if self._supported(store, v, val, others, ranges):
                    hi_ok = val
                    break
            if hi_ok is None:
                hi_ok = lo_ok
            if not store.set_domain(v, IntDomain.range(lo_ok, hi_ok)):
                return False
        return True

    def _supported(self, store, v, val, others, ranges) -> bool:
        for combo in itertools.product(*ranges):
            assign = dict(zip(others, combo))
            assign[v] = val
            a = eval_expr(self.lhs, assign.__getitem__)
            b = eval_expr(self.rhs, assign.__getitem__)
            if rel_holds(self.op, a, b):
                return True
        return False


class EqVarsProp(Propagator):
    """x #= y kept domain-consistent by plain intersection."""

    __slots__ = ("x", "y")

    def __init__(self, x: VarId, y: VarId) -> None:
        super().__init__()
        self.x, self.y = x, y

    def subscriptions(self):
        return [(self.x, Wake.ANY), (self.y, Wake.ANY)]

    def filter(self, store: Store, env: Env) -> Status:
        both = store.dom(self.x).intersect(store.dom(self.y))
        if not store.set_domain(self.x, both):
            return Status.FAIL
        if not store.set_domain(self.y, both):
            return Status.FAIL
        return Status.EXIT if both.is_singleton() else Status.SUSPEND


class IncrProp(Propagator):
    """x #= y + 1, domain-consistent via domain shifts."""

    __slots__ = ("x", "y")

    def __init__(self, x: VarId, y: VarId) -> None:
        super().__init__()
        self.x, self.y = x, y

    def subscriptions(self):
        return [(self.x, Wake.ANY), (self.y, Wake.ANY)]

    def filter(self, store: Store, env: Env) -> Status:
        if not store.set_domain(self.x, store.dom(self.y).shift(1)):
            return Status.FAIL
        if not store.set_domain(self.y, store.dom(self.x).shift(-1)):
            return Status.FAIL
        return Status.EXIT if store.dom(self.x).is_singleton() else Status.SUSPEND


class SumProp(Propagator):
    """sum(vars) RelOp total, bound-consistent.

    The total is a plain int constant or a ``Var`` node (a bare VarId would
    be indistinguishable from a constant).
    """

    __slots__ = ("vs", "op", "tvar", "tconst")

    def __init__(self, vs: Iterable[VarId], op: RelOp, total: "Var | int") -> None:
        super().__init__()
        self.vs = tuple(vs)
        self.op = op
        if isinstance(total, Var):
            self.tvar: VarId | None = total.vid
            self.tconst = 0
        elif isinstance(total, int):
            self.tvar = None
            self.tconst = total
        else:
            raise TypeError(f"total must be Var or int, got {total!r}")

    def subscriptions(self):
        subs = [(v, Wake.BOUNDS) for v in self.vs]
        if self.tvar is not None:
            subs.append((self.tvar, Wake.BOUNDS))
        return subs

    def _total_bounds(self, store) -> tuple[Bound, Bound]:
        if self.tvar is None:
            return self.tconst, self.tconst
        return store.dom(self.tvar).bounds()

    def _narrow_total(self, store, lo: Bound, hi: Bound) -> bool:
        if self.tvar is None:
            return lo <= self.tconst <= hi
        return store.set_domain(self.tvar, IntDomain.range(lo, hi))

    def filter(self, store: Store, env: Env) -> Status:
        op = self.op
        bs = [store.dom(v).bounds() for v in self.vs]
        tl, th = self._total_bounds(store)

        def rest(i: int) -> tuple[Bound, Bound]:
            lo: Bound = 0
            hi: Bound = 0
            for j, (l, h) in enumerate(bs):
                if j != i:
                    lo = bound_add(lo, l)
                    hi = bound_add(hi, h)
            return lo, hi

        s_lo: Bound = 0
        s_hi: Bound = 0
        for l, h in bs:
            s_lo = bound_add(s_lo, l)
            s_hi = bound_add(s_hi, h)

        if op is RelOp.EQ:
            if s_lo > th or s_hi < tl:
                return Status.FAIL
            if not self._narrow_total(store, s_lo, s_hi):
                return Status.FAIL
            tl, th = self._total_bounds(store)
            for i, v in enumerate(self.vs):
                rl, rh = rest(i)
                lo, hi = bound_sub(tl, rh), bound_sub(th, rl)
                if not store.set_domain(v, IntDomain.range(lo, hi)):
                    return Status.FAIL
            if s_lo == s_hi and tl == th:
                return Status.EXIT
            return Status.SUSPEND

        if op is RelOp.NE:
            if s_lo == s_hi and tl == th:
                return Status.EXIT if s_lo != tl else Status.FAIL
            if s_hi < tl or s_lo > th:
                return Status.EXIT
            return Status.SUSPEND

        # order the comparison as sum <op> total or total <op> sum
        if op in (RelOp.LE, RelOp.LT):
            strict = op is RelOp.LT
            gap = 1 if strict else 0
            if bound_add(s_lo, gap) > th:
                return Status.FAIL
            if bound_add(s_hi, gap) <= tl:
                return Status.EXIT
            if not self._narrow_total(store, bound_add(s_lo, gap), POS_INF):
                return Status.FAIL
            tl, th = self._total_bounds(store)
            for i, v in enumerate(self.vs):
                rl, _ = rest(i)
                hi = bound_sub(bound_sub(th, gap), rl)
                if not store.set_domain(v, IntDomain.range(NEG_INF, hi)):
                    return Status.FAIL
            return Status.SUSPEND

        # GE / GT: sum >= total (+ gap)
        strict = op is RelOp.GT
        gap = 1 if strict else 0
        if s_hi < bound_add(tl, gap):
            return Status.FAIL
        if s_lo >= bound_add(th, gap):
            return Status.EXIT
        if not self._narrow_total(store, NEG_INF, bound_sub(s_hi, gap)):
            return Status.FAIL
        tl, th = self._total_bounds(store)
        for i, v in enumerate(self.vs):
            _, rh = rest(i)
            lo = bound_sub(bound_add(tl, gap), rh)
            if not store.set_domain(v, IntDomain.range(lo, POS_INF)):
                return Status.FAIL
        return Status.SUSPEND


# -- posting helpers -----------------------------------------------------


def post_rel(store: Store, lhs: Expr, op: RelOp, rhs: Expr) -> Status:
    """Register a relational constraint; shortcuts for the ground and
    single-variable cases run immediately."""
    lhs, rhs = as_expr(lhs), as_expr(rhs)
    if op in (RelOp.GT, RelOp.GE):
        lhs, rhs, op = rhs, lhs, _flip(op)
    lv, rv = expr_vars(lhs), expr_vars(rhs)
    if not lv and not rv:
        a = eval_expr(lhs, None)  # type: ignore[arg-type]
        b = eval_expr(rhs, None)  # type: ignore[arg-type]
        return Status.EXIT if rel_holds(op, a, b) else Status.FAIL
    # single variable against a constant: exact, no propagator needed
    if isinstance(lhs, Var) and not rv and op in (RelOp.EQ, RelOp.NE):
        c = eval_expr(rhs, None)  # type: ignore[arg-type]
        allowed = IntDomain.point(c) if op is RelOp.EQ else FULL.without(c)
        ok = store.set_domain(lhs.vid, allowed)
        return Status.EXIT if ok else Status.FAIL
    if isinstance(rhs, Var) and not lv and op in (RelOp.EQ, RelOp.NE):
        c = eval_expr(lhs, None)  # type: ignore[arg-type]
        allowed = IntDomain.point(c) if op is RelOp.EQ else FULL.without(c)
        ok = store.set_domain(rhs.vid, allowed)
        return Status.EXIT if ok else Status.FAIL
    if op is RelOp.EQ and isinstance(lhs, Var) and isinstance(rhs, Var):
        if lhs.vid == rhs.vid:
            return Status.EXIT
        store.register(EqVarsProp(lhs.vid, rhs.vid))
        return Status.SUSPEND
    store.register(RelProp(lhs, op, rhs))
    return Status.SUSPEND


def post_incr(store: Store, x: VarId, y: VarId) -> Status:
    store.register(IncrProp(x, y))
    return Status.SUSPEND


def post_sum(
    store: Store, vs: Iterable[VarId], op: RelOp, total: "Var | int"
) -> Status:
    vs = tuple(vs)
    if not vs:
        raise ValueError("sum of no variables")
    store.register(SumProp(vs, op, total))
    return Status.SUSPEND


def post_in_range(store: Store, v: VarId, r: IntDomain) -> Status:
    return Status.EXIT if store.set_domain(v, r) else Status.FAIL
