"""Deterministic labeling and branch-and-bound maximization.

Search is depth-first over the given variables in order, trying values
ascending.  Every implementation being compared therefore explores the
same tree; only propagation strength differs.  Each value trial runs
inside a snapshot with its own propagation queue, so the store comes
back bit-identical on backtrack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .domain import IntDomain, POS_INF
from .engine import Env, Status, Store, VarId, fixpoint

Solution = tuple[int, ...]


class SearchError(ValueError):
    """Labeling was asked to do something it cannot (usage error)."""


@dataclass(frozen=True)
class LabelOptions:
    var_order: str = "leftmost"
    val_order: str = "ascending"
    objective: VarId | None = None  # None, or a variable to maximize


def _check(store: Store, vars: Sequence[VarId], opts: LabelOptions) -> None:
    if opts.var_order != "leftmost" or opts.val_order != "ascending":
        raise SearchError("only leftmost/ascending order is supported")
    for vid in vars:
        if not store.dom(vid).is_finite():
            raise SearchError(f"variable {vid} has an unbounded domain")


def _node(
    store: Store,
    vars: Sequence[VarId],
    env: Env,
    i: int,
    obj: VarId | None,
    bound: list,
) -> Iterator[tuple[Solution, int | None]]:
    env.check_deadline()
    if obj is not None and bound[0] is not None:
        # branch-and-bound cut: the objective must beat the incumbent
        better = IntDomain.range(bound[0] + 1, POS_INF)
        if not store.set_domain(obj, better):
            return
        if fixpoint(store, env) is Status.FAIL:
            return
    if i == len(vars):
        sol = tuple(store.dom(v).value() for v in vars)
        if obj is None:
            yield sol, None
        else:
            d = store.dom(obj)
            if not d.is_singleton():
                raise SearchError("objective not fixed by labeling")
            yield sol, d.value()
        return
    vid = vars[i]
    for v in store.dom(vid).values():
        if v not in store.dom(vid):  # removed by a bound cut meanwhile
            continue
        mark = store.snapshot()
        store.push_queue()
        try:
            ok = store.set_domain(vid, IntDomain.point(v))
            if ok and fixpoint(store, env) is not Status.FAIL:
                yield from _node(store, vars, env, i + 1, obj, bound)
        finally:
            store.pop_queue()
            store.restore(mark)


def label(
    store: Store,
    vars: Sequence[VarId],
    opts: LabelOptions | None = None,
    env: Env | None = None,
) -> Iterator[Solution]:
    """All solutions over ``vars``, depth-first, values ascending.

    Yields each solution exactly once; an unsatisfiable store yields
    nothing.  With an objective in ``opts`` the yielded solutions are
    the strictly improving ones and the last is optimal.
    """
    opts = opts or LabelOptions()
    env = env or Env()
    _check(store, vars, opts)
    if store.failed:
        return
    vars = list(vars)
    bound: list = [None]
    for sol, val in _node(store, vars, env, 0, opts.objective, bound):
        yield sol
        if val is not None:
            bound[0] = val


def maximize(
    store: Store,
    vars: Sequence[VarId],
    obj: VarId,
    env: Env | None = None,
) -> Solution | None:
    """Best solution by branch and bound, or None when unsatisfiable.

    After each solution the objective is constrained past the incumbent
    in place, so later branches are cut without restarting the search.
    """
    best = None
    opts = LabelOptions(objective=obj)
    for sol in label(store, vars, opts, env):
        best = sol
    return best


def maximal_k(
    build: Callable[[Env], Store],
    kmax: int,
    deadline: float | None = None,
) -> int | None:
    """Greatest k whose pruning is already at fixpoint, None if > kmax.

    ``build`` posts the problem into a fresh store under the given Env
    and returns it.  Domains are compared across k = 0..kmax+1: the
    answer is the greatest k where depth k+1 adds nothing and depth
    k-1 was still weaker; 0 when depth never mattered; None when the
    domains are still shifting at kmax.
    """
    profiles = []
    for k in range(kmax + 2):
        store = build(Env(k=k, deadline=deadline))
        profiles.append(tuple(store.domains))
    for k in range(kmax, 0, -1):
        if profiles[k + 1] == profiles[k] and profiles[k] != profiles[k - 1]:
            return k
    if profiles[1] == profiles[0]:
        return 0
    return None
