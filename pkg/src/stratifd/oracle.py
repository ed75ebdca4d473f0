"""Brute-force ground truth for cross-checking the solver.

Everything here evaluates constraint trees directly under full
assignments; none of it touches stores, propagators, or speculation.
Deliberately slow and obvious.  The random-instance generator at the
bottom is shared by the command-line cross-checker and the test suite.
"""

from __future__ import annotations

from itertools import product
from random import Random
from typing import Iterable, Iterator, Sequence

from .arith import Add, Const, Expr, Mul, Neg, RelOp, Sub, Var, rel_holds
from .constructive import (
    Cd,
    CFalse,
    Cn,
    Conj,
    CTrue,
    Ctr,
    Cxd,
    GlobalCall,
    Imp,
    InRange,
    Ite,
    Rand,
    Rel,
    Ror,
)
from .domain import IntDomain
from .globalctr import holds_ground

Assignment = tuple[int, ...]


def eval_ground(e: Expr, val) -> int:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return val(e.vid)
    if isinstance(e, Add):
        return eval_ground(e.a, val) + eval_ground(e.b, val)
    if isinstance(e, Sub):
        return eval_ground(e.a, val) - eval_ground(e.b, val)
    if isinstance(e, Mul):
        return eval_ground(e.a, val) * eval_ground(e.b, val)
    if isinstance(e, Neg):
        return -eval_ground(e.a, val)
    raise TypeError(f"not a ground expression: {e!r}")


def holds(c: Ctr, val) -> bool:
    """Classical truth of ``c`` under a full assignment (vid -> int)."""
    if isinstance(c, CTrue):
        return True
    if isinstance(c, CFalse):
        return False
    if isinstance(c, Rel):
        return rel_holds(c.op, eval_ground(c.lhs, val), eval_ground(c.rhs, val))
    if isinstance(c, InRange):
        return val(c.vid) in c.dom
    if isinstance(c, (Conj, Rand)):
        return holds(c.a, val) and holds(c.b, val)
    if isinstance(c, (Cd, Ror)):
        return holds(c.a, val) or holds(c.b, val)
    if isinstance(c, Cxd):
        return holds(c.a, val) != holds(c.b, val)
    if isinstance(c, Imp):
        return holds(c.b, val) if holds(c.a, val) else True
    if isinstance(c, Cn):
        return not holds(c.a, val)
    if isinstance(c, Ite):
        return holds(c.a, val) if holds(c.cond, val) else holds(c.b, val)
    if isinstance(c, GlobalCall):
        return holds_ground(c, val)
    raise TypeError(f"not a constraint: {c!r}")


def box_size(doms: Sequence[IntDomain]) -> int:
    total = 1
    for d in doms:
        if not d.is_finite():
            raise ValueError("cannot enumerate an unbounded domain")
        total *= d.size()
    return total


def iter_box(doms: Sequence[IntDomain]) -> Iterator[Assignment]:
    """All assignments in the box, lexicographic, values ascending."""
    return product(*(tuple(d.values()) for d in doms))


def solution_set(
    conjuncts: Iterable[Ctr], doms: Sequence[IntDomain]
) -> set[Assignment]:
    conjuncts = tuple(conjuncts)
    out = set()
    for point in iter_box(doms):
        val = point.__getitem__
        if all(holds(c, val) for c in conjuncts):
            out.add(point)
    return out


def projections(
    sols: Iterable[Assignment], nvars: int
) -> list[set[int]]:
    """Per-variable value sets actually used by the solutions."""
    out: list[set[int]] = [set() for _ in range(nvars)]
    for point in sols:
        for i, v in enumerate(point):
            out[i].add(v)
    return out


# -- random instances ----------------------------------------------------


def random_expr(rng: Random, nvars: int, lo: int, hi: int) -> Expr:
    v = lambda: Var(rng.randrange(nvars))
    c = lambda: Const(rng.randint(lo, hi))
    pick = rng.randrange(8)
    if pick < 3:
        return v()
    if pick == 3:
        return c()
    if pick == 4:
        return Add(v(), c())
    if pick == 5:
        return Sub(v(), v())
    if pick == 6:
        return Add(v(), v())
    return Mul(Const(rng.randint(lo, max(lo, min(hi, 3)))), v())


def random_ctr(
    rng: Random,
    nvars: int,
    lo: int,
    hi: int,
    depth: int,
    cd_only: bool = False,
) -> Ctr:
    """A random constraint tree of at most the given operator depth.

    ``cd_only`` restricts the internal nodes to nested disjunctions,
    which is the shape whose pruning depends on the depth budget.
    """
    if depth <= 0 or rng.random() < 0.35:
        pick = rng.random()
        if pick < 0.04:
            return CTrue()
        if pick < 0.08:
            return CFalse()
        if pick < 0.30:
            vals = sorted(
                rng.sample(range(lo, hi + 1), rng.randint(1, 3))
            )
            return InRange(rng.randrange(nvars), IntDomain.from_values(vals))
        return Rel(
            random_expr(rng, nvars, lo, hi),
            rng.choice(list(RelOp)),
            random_expr(rng, nvars, lo, hi),
        )
    sub = lambda: random_ctr(rng, nvars, lo, hi, depth - 1, cd_only)
    if cd_only:
        return Cd(sub(), sub())
    pick = rng.randrange(6)
    if pick == 0:
        return Conj(sub(), sub())
    if pick == 1:
        return Cd(sub(), sub())
    if pick == 2:
        return Cxd(sub(), sub())
    if pick == 3:
        return Imp(sub(), sub())
    if pick == 4:
        return Cn(sub())
    return Ite(sub(), sub(), sub())


def random_csp(
    rng: Random,
    max_vars: int = 4,
    lo: int = 0,
    hi: int = 9,
    depth: int = 4,
    cd_only: bool = False,
) -> tuple[list[IntDomain], list[Ctr]]:
    """A random finite box plus 1-3 constraint trees over it."""
    nvars = rng.randint(1, max_vars)
    doms = []
    for _ in range(nvars):
        a, b = rng.randint(lo, hi), rng.randint(lo, hi)
        a, b = min(a, b), max(a, b)
        d = IntDomain.range(a, b)
        if b - a >= 2 and rng.random() < 0.3:
            hole = rng.randint(a + 1, b - 1)
            d = IntDomain.from_values(
                x for x in range(a, b + 1) if x != hole
            )
        doms.append(d)
    ctrs = [
        random_ctr(rng, nvars, lo, hi, depth, cd_only)
        for _ in range(rng.randint(1, 3))
    ]
    return doms, ctrs
