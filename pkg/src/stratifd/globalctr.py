"""Global constraints written as constructive-operator formulas.

Each encoding builds one constraint tree out of Cd, conjunction, and the
arithmetic leaves, unfolding any recursion eagerly (fresh helper
variables are allocated up front).  Filtering strength then comes
entirely from the disjunctive operators; none of these have a dedicated
propagation algorithm of their own.

The same encodings can be reached from formula text through
:class:`~stratifd.constructive.GlobalCall` nodes, which
:func:`install_global` expands on installation.  Two auxiliary names ride
along for the encodings' internal use: ``incr`` (the domain-consistent
X = Y + 1 channel) and ``sum`` (bound-consistent linear aggregate).
"""

from __future__ import annotations

from .arith import (
    Add,
    Const,
    Mul,
    RelOp,
    Var,
    post_incr,
    post_sum,
)
from .constructive import (
    Cd,
    Conj,
    Ctr,
    FALSE,
    GlobalCall,
    InRange,
    Rel,
    conj_all,
    post,
)
from .domain import POS_INF, IntDomain
from .engine import Env, Status, Store, VarId


def _vv(x: VarId, op: RelOp, y: VarId) -> Rel:
    """Relation between two variables (VarId is an int, so the
    constant-valued form gets its own helper)."""
    return Rel(Var(x), op, Var(y))


def _vc(x: VarId, op: RelOp, k: int) -> Rel:
    """Relation between a variable and an integer constant."""
    return Rel(Var(x), op, Const(k))


# -- Ultrametric ---------------------------------------------------------


def build_um3(x: VarId, y: VarId, z: VarId) -> Ctr:
    """x>y=z or y>z, x=z or z>x, x=y or x=y=z, balanced two-deep."""
    return Cd(
        Cd(
            Conj(_vv(x, RelOp.GT, y), _vv(y, RelOp.EQ, z)),
            Conj(_vv(y, RelOp.GT, z), _vv(x, RelOp.EQ, z)),
        ),
        Cd(
            Conj(_vv(z, RelOp.GT, x), _vv(x, RelOp.EQ, y)),
            Conj(_vv(x, RelOp.EQ, y), _vv(y, RelOp.EQ, z)),
        ),
    )


def um3(store: Store, x: VarId, y: VarId, z: VarId, env: Env) -> Status:
    return post(store, build_um3(x, y, z), env)


# -- Domain (0/1 channelling) --------------------------------------------


def build_domctr(store: Store, x: VarId, xs: list[VarId]) -> Ctr:
    """x in 1..n, xs 0/1, and x = i exactly when xs[i-1] = 1.

    Unfolds the recursion over xs: either x is 1, the head is 1 and the
    tail is all zero, or x > 1, the head is 0, and a fresh successor
    variable y = x - 1 indexes the tail the same way.
    """
    n = len(xs)
    if n < 1:
        raise ValueError("domctr needs at least one 0/1 variable")
    parts: list[Ctr] = [InRange(x, IntDomain.range(1, n))]
    parts += [InRange(v, IntDomain.range(0, 1)) for v in xs]
    parts.append(_domctr_rec(store, x, xs))
    return conj_all(parts)


def _domctr_rec(store: Store, x: VarId, xs: list[VarId]) -> Ctr:
    if len(xs) == 1:
        return Conj(_vc(x, RelOp.EQ, 1), _vc(xs[0], RelOp.EQ, 1))
    n1 = len(xs) - 1
    y = store.new_var(IntDomain.range(1, n1))
    zeros = conj_all(InRange(v, IntDomain.point(0)) for v in xs[1:])
    return Cd(
        conj_all([_vc(x, RelOp.EQ, 1), _vc(xs[0], RelOp.EQ, 1), zeros]),
        conj_all(
            [
                _vc(x, RelOp.GT, 1),
                _vc(xs[0], RelOp.EQ, 0),
                InRange(y, IntDomain.range(1, n1)),
                GlobalCall("incr", (Var(x), Var(y))),
                _domctr_rec(store, y, xs[1:]),
            ]
        ),
    )


def domctr(store: Store, x: VarId, xs: list[VarId], env: Env) -> Status:
    return post(store, build_domctr(store, x, xs), env)


# -- Element -------------------------------------------------------------


def build_elemctr(store: Store, i: VarId, xs: list[VarId], j: VarId) -> Ctr:
    """i in 1..n and xs[i] = j, by the same recursion as build_domctr."""
    n = len(xs)
    if n < 1:
        raise ValueError("elemctr needs at least one list variable")
    return Conj(
        InRange(i, IntDomain.range(1, n)), _elemctr_rec(store, i, xs, j)
    )


def _elemctr_rec(store: Store, i: VarId, xs: list[VarId], j: VarId) -> Ctr:
    if len(xs) == 1:
        return Conj(_vc(i, RelOp.EQ, 1), _vv(j, RelOp.EQ, xs[0]))
    n1 = len(xs) - 1
    i1 = store.new_var(IntDomain.range(1, n1))
    return Cd(
        Conj(_vc(i, RelOp.EQ, 1), _vv(xs[0], RelOp.EQ, j)),
        conj_all(
            [
                _vc(i, RelOp.GT, 1),
                InRange(i1, IntDomain.range(1, n1)),
                GlobalCall("incr", (Var(i), Var(i1))),
                _elemctr_rec(store, i1, xs[1:], j),
            ]
        ),
    )


def elemctr(
    store: Store, i: VarId, xs: list[VarId], j: VarId, env: Env
) -> Status:
    return post(store, build_elemctr(store, i, xs, j), env)


# -- strict lexicographic ordering ---------------------------------------


def build_lexctr(xs: list[VarId], ys: list[VarId]) -> Ctr:
    """xs <lex ys: first column strictly smaller, or some later column
    strictly smaller with all earlier columns equal.

    The disjunction nests to the left around an unsatisfiable seed, so
    committing always lands on a (column-lt, prefix-equal) conjunction.
    """
    if len(xs) != len(ys) or not xs:
        raise ValueError("lexctr needs two equal-length nonempty lists")
    t: Ctr = FALSE
    lx, ly = [xs[0]], [ys[0]]
    for x, y in zip(xs[1:], ys[1:]):
        t = Cd(t, Conj(_vv(x, RelOp.LT, y), _gen_eq(lx, ly)))
        lx.insert(0, x)
        ly.insert(0, y)
    return Cd(_vv(xs[0], RelOp.LT, ys[0]), t)


def _gen_eq(lx: list[VarId], ly: list[VarId]) -> Ctr:
    if len(lx) == 1:
        return _vv(lx[0], RelOp.EQ, ly[0])
    return Conj(_vv(lx[0], RelOp.EQ, ly[0]), _gen_eq(lx[1:], ly[1:]))


def lexctr(store: Store, xs: list[VarId], ys: list[VarId], env: Env) -> Status:
    return post(store, build_lexctr(xs, ys), env)


# -- bounded multiples ---------------------------------------------------


def build_mulctr(
    store: Store, n: VarId, x: VarId, mn: int, mx: int
) -> Ctr:
    """min <= x <= max and x = m*n for some multiplier m.

    The multiplier range is fixed when the constraint is built: m runs
    from 1 to max(dom(x) cut to mx) div max(dom(n)), and is not revised
    afterwards even if the domains shrink.
    """
    xmax = min(store.dom(x).bounds()[1], mx)
    nmax = store.dom(n).bounds()[1]
    if nmax is POS_INF:
        raise ValueError("mulctr needs a finite upper bound on the factor")
    if nmax <= 0:
        raise ValueError("mulctr needs a positive factor bound")
    mmax = xmax // nmax
    parts: list[Ctr] = [_vc(x, RelOp.GE, mn), _vc(x, RelOp.LE, mx)]
    if mmax < 1:
        parts.append(FALSE)
        return conj_all(parts)
    multiples = [
        Rel(Var(x), RelOp.EQ, Mul(Const(m), Var(n)))
        for m in range(1, mmax + 1)
    ]
    chain: Ctr = multiples[-1]
    for c in reversed(multiples[:-1]):
        chain = Cd(c, chain)
    parts.append(chain)
    return conj_all(parts)


def mulctr(
    store: Store, n: VarId, x: VarId, mn: int, mx: int, env: Env
) -> Status:
    return post(store, build_mulctr(store, n, x, mn, mx), env)


# -- Disjunctive scheduling ----------------------------------------------


def build_disjctr(
    starts: list[VarId], durations: list[VarId], horizon: "Var | int"
) -> Ctr:
    """No two tasks overlap, and sum(starts) + sum(durations) = horizon.

    One Cd per unordered task pair: i before j or j before i.
    """
    if len(starts) != len(durations) or len(starts) < 2:
        raise ValueError("disjctr needs two equal-length lists of 2+ tasks")
    vs = tuple(Var(v) for v in starts + durations)
    parts: list[Ctr] = [GlobalCall("sum", (vs, RelOp.EQ, horizon))]
    for i in range(len(starts)):
        for j in range(i + 1, len(starts)):
            si, pi = starts[i], durations[i]
            sj, pj = starts[j], durations[j]
            parts.append(
                Cd(
                    Rel(Add(Var(si), Var(pi)), RelOp.LE, Var(sj)),
                    Rel(Add(Var(sj), Var(pj)), RelOp.LE, Var(si)),
                )
            )
    return conj_all(parts)


def disjctr(
    store: Store,
    starts: list[VarId],
    durations: list[VarId],
    horizon: "Var | int",
    env: Env,
) -> Status:
    return post(store, build_disjctr(starts, durations, horizon), env)


# -- GlobalCall plumbing -------------------------------------------------


def _vid(arg) -> VarId:
    if isinstance(arg, Var):
        return arg.vid
    raise TypeError(f"expected a variable argument, got {arg!r}")


def _vids(arg) -> list[VarId]:
    return [_vid(a) for a in arg]


def build_global(store: Store, call: GlobalCall) -> Ctr:
    """Expand a named global call into its constraint tree."""
    name, args = call.name, call.args
    if name == "um3":
        x, y, z = args
        return build_um3(_vid(x), _vid(y), _vid(z))
    if name == "domctr":
        x, xs = args
        return build_domctr(store, _vid(x), _vids(xs))
    if name == "elemctr":
        i, xs, j = args
        return build_elemctr(store, _vid(i), _vids(xs), _vid(j))
    if name == "lexctr":
        xs, ys = args
        return build_lexctr(_vids(xs), _vids(ys))
    if name == "mulctr":
        n, x, mn, mx = args
        return build_mulctr(store, _vid(n), _vid(x), mn, mx)
    if name == "disjctr":
        starts, durations, horizon = args
        return build_disjctr(_vids(starts), _vids(durations), horizon)
    raise ValueError(f"unknown global constraint: {name}")


def install_global(store: Store, call: GlobalCall, env: Env) -> Status:
    """Install a global call (without running the fixpoint)."""
    from .constructive import _install

    if call.name == "incr":
        x, y = call.args
        return post_incr(store, _vid(x), _vid(y))
    if call.name == "sum":
        vs, op, total = call.args
        return post_sum(store, _vids(vs), op, total)
    return _install(store, build_global(store, call), env)


# -- ground semantics ----------------------------------------------------


def holds_ground(call: GlobalCall, val) -> bool:
    """Truth of a global call under a full assignment (val: VarId -> int).

    Written against the defining predicates, not the encodings.
    """
    name, args = call.name, call.args
    if name == "incr":
        x, y = args
        return val(x.vid) == val(y.vid) + 1
    if name == "sum":
        vs, op, total = args
        from .arith import rel_holds

        t = total.vid if isinstance(total, Var) else total
        tv = val(t) if isinstance(total, Var) else total
        return rel_holds(op, sum(val(v.vid) for v in vs), tv)
    if name == "um3":
        x, y, z = (val(a.vid) for a in args)
        return (
            (x > y and y == z)
            or (y > z and x == z)
            or (z > x and x == y)
            or (x == y and y == z)
        )
    if name == "domctr":
        x, xs = args
        xv = val(x.vid)
        bits = [val(a.vid) for a in xs]
        if not all(b in (0, 1) for b in bits):
            return False
        if not 1 <= xv <= len(bits):
            return False
        return all((b == 1) == (xv == i) for i, b in enumerate(bits, start=1))
    if name == "elemctr":
        i, xs, j = args
        iv = val(i.vid)
        if not 1 <= iv <= len(xs):
            return False
        return val(xs[iv - 1].vid) == val(j.vid)
    if name == "lexctr":
        xs, ys = args
        xv = [val(a.vid) for a in xs]
        yv = [val(a.vid) for a in ys]
        return xv < yv
    if name == "mulctr":
        n, x, mn, mx = args
        nv, xv = val(n.vid), val(x.vid)
        if not mn <= xv <= mx:
            return False
        return nv != 0 and xv % nv == 0 and xv // nv >= 1
    if name == "disjctr":
        starts, durations, horizon = args
        sv = [val(a.vid) for a in starts]
        pv = [val(a.vid) for a in durations]
        hv = val(horizon.vid) if isinstance(horizon, Var) else horizon
        if sum(sv) + sum(pv) != hv:
            return False
        for i in range(len(sv)):
            for j in range(i + 1, len(sv)):
                if not (sv[i] + pv[i] <= sv[j] or sv[j] + pv[j] <= sv[i]):
                    return False
        return True
    raise ValueError(f"unknown global constraint: {name}")
