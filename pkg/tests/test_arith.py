"""Arithmetic propagators against a brute-force oracle."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratifd.arith import (
    Add,
    Const,
    Mul,
    Neg,
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
from stratifd.domain import EMPTY, NEG_INF, POS_INF, FULL, IntDomain
from stratifd.engine import Env, Status, Store, fixpoint


def run(store, env=None):
    return fixpoint(store, env or Env())


# -- expression evaluation ----------------------------------------------


def test_eval_bounds_product():
    s = Store()
    j0 = s.new_var(IntDomain.point(2))
    i0 = s.new_var(IntDomain.range(5, 16))
    assert eval_bounds(Mul(Var(j0), Var(i0)), s) == (10, 32)


def test_eval_bounds_no_correlation():
    s = Store()
    x = s.new_var(IntDomain.range(1, 3))
    assert eval_bounds(Sub(Var(x), Var(x)), s) == (-2, 2)


def test_eval_bounds_const_and_infinite():
    s = Store()
    assert eval_bounds(Const(7), s) == (7, 7)
    y = s.new_var(IntDomain.range(NEG_INF, 5))
    assert eval_bounds(Neg(Var(y)), s) == (-5, POS_INF)
    assert eval_bounds(Mul(Var(y), Const(0)), s) == (0, 0)


def test_negate_relop():
    assert negate_relop(RelOp.LE) is RelOp.GT
    assert negate_relop(RelOp.EQ) is RelOp.NE
    for op in RelOp:
        assert negate_relop(negate_relop(op)) is op


# -- posting relational constraints -------------------------------------


def test_le_with_offset():
    s = Store()
    a = s.new_var(IntDomain.range(1, 10))
    b = s.new_var(IntDomain.range(1, 10))
    post_rel(s, Add(Var(a), Const(7)), RelOp.LE, Var(b))
    assert run(s) is Status.EXIT
    assert s.dom(a) == IntDomain.range(1, 3)
    assert s.dom(b) == IntDomain.range(8, 10)


def test_eq_const_is_exact():
    s = Store()
    x = s.new_var(IntDomain.range(1, 10))
    assert post_rel(s, Var(x), RelOp.EQ, Const(6)) is Status.EXIT
    assert s.dom(x) == IntDomain.point(6)


def test_ne_const_leaves_hole():
    s = Store()
    x = s.new_var(IntDomain.range(1, 10))
    assert post_rel(s, Var(x), RelOp.NE, Const(5)) is Status.EXIT
    assert s.dom(x) == IntDomain([(1, 4), (6, 10)])


def test_eq_const_out_of_domain_fails():
    s = Store()
    x = s.new_var(IntDomain.range(1, 3))
    assert post_rel(s, Var(x), RelOp.EQ, Const(6)) is Status.FAIL
    assert s.failed


def test_var_var_eq_is_domain_consistent():
    s = Store()
    x = s.new_var(IntDomain.from_values([1, 5, 9]))
    y = s.new_var(IntDomain.from_values([5, 9, 12]))
    post_rel(s, Var(x), RelOp.EQ, Var(y))
    assert run(s) is Status.EXIT or s.dom(x) == s.dom(y)
    assert s.dom(x) == IntDomain.from_values([5, 9])
    assert s.dom(y) == IntDomain.from_values([5, 9])


def test_ground_relation_decides_immediately():
    s = Store()
    assert post_rel(s, Const(3), RelOp.LT, Const(5)) is Status.EXIT
    assert post_rel(s, Const(5), RelOp.LT, Const(3)) is Status.FAIL


def test_square_upper_bound():
    s = Store()
    x = s.new_var(IntDomain.range(0, 1000))
    post_rel(s, Mul(Var(x), Var(x)), RelOp.LT, Const(100))
    assert run(s) is not Status.FAIL
    assert s.dom(x) == IntDomain.range(0, 9)


def test_product_with_fixed_factor():
    s = Store()
    j0 = s.new_var(IntDomain.point(2))
    i0 = s.new_var(IntDomain.range(5, 16))
    j2 = s.new_var(FULL)
    post_rel(s, Mul(Var(j0), Var(i0)), RelOp.EQ, Var(j2))
    assert run(s) is not Status.FAIL
    # bound filtering only: interior parity holes are kept
    assert s.dom(j2) == IntDomain.range(10, 32)


def test_gt_ge_mirror():
    s = Store()
    a = s.new_var(IntDomain.range(1, 10))
    b = s.new_var(IntDomain.range(1, 10))
    post_rel(s, Var(a), RelOp.GT, Var(b))
    run(s)
    assert s.dom(a) == IntDomain.range(2, 10)
    assert s.dom(b) == IntDomain.range(1, 9)


# -- incr ----------------------------------------------------------------


def test_incr_shifts_holes():
    s = Store()
    y = s.new_var(IntDomain.from_values([1, 5]))
    x = s.new_var(FULL)
    post_incr(s, x, y)
    run(s)
    assert s.dom(x) == IntDomain.from_values([2, 6])


def test_incr_both_directions():
    s = Store()
    x = s.new_var(IntDomain.range(3, 4))
    y = s.new_var(IntDomain.range(1, 9))
    post_incr(s, x, y)
    run(s)
    assert s.dom(y) == IntDomain.range(2, 3)


def test_incr_fails_on_equal_singletons():
    s = Store()
    x = s.new_var(IntDomain.point(1))
    y = s.new_var(IntDomain.point(1))
    post_incr(s, x, y)
    assert run(s) is Status.FAIL


# -- sum -----------------------------------------------------------------


def test_sum_eq_const():
    s = Store()
    x = s.new_var(IntDomain.range(1, 9))
    y = s.new_var(FULL)
    post_sum(s, [x, y], RelOp.EQ, 10)
    run(s)
    assert s.dom(y) == IntDomain.range(1, 9)


def test_sum_single_var():
    s = Store()
    x = s.new_var(IntDomain.range(0, 20))
    post_sum(s, [x], RelOp.EQ, 5)
    run(s)
    assert s.dom(x) == IntDomain.point(5)


def test_sum_overflow_fails():
    s = Store()
    vs = [s.new_var(IntDomain.range(0, 2)) for _ in range(3)]
    post_sum(s, vs, RelOp.EQ, 7)
    assert run(s) is Status.FAIL


def test_sum_le_with_var_total():
    s = Store()
    x = s.new_var(IntDomain.range(2, 9))
    y = s.new_var(IntDomain.range(3, 9))
    t = s.new_var(IntDomain.range(0, 7))
    post_sum(s, [x, y], RelOp.LE, Var(t))
    run(s)
    assert s.dom(t) == IntDomain.range(5, 7)
    assert s.dom(x) == IntDomain.range(2, 4)
    assert s.dom(y) == IntDomain.range(3, 5)


def test_sum_rejects_empty_list():
    s = Store()
    with pytest.raises(ValueError):
        post_sum(s, [], RelOp.EQ, 0)


# -- in-range ------------------------------------------------------------


def test_in_range():
    s = Store()
    y = s.new_var(FULL)
    assert post_in_range(s, y, IntDomain.range(62, 77)) is Status.EXIT
    assert s.dom(y) == IntDomain.range(62, 77)
    assert post_in_range(s, y, EMPTY) is Status.FAIL
    s2 = Store()
    x = s2.new_var(IntDomain.range(1, 10))
    post_in_range(s2, x, IntDomain.range(5, 20))
    assert s2.dom(x) == IntDomain.range(5, 10)


# -- properties against the brute-force oracle ---------------------------


def small_domain():
    return st.lists(st.integers(-6, 9), min_size=1, max_size=6).map(
        IntDomain.from_values
    )


def exprs(nvars):
    leaves = st.one_of(
        st.integers(-4, 4).map(Const),
        st.integers(0, nvars - 1).map(Var),
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, children).map(lambda t: Add(*t)),
            st.tuples(children, children).map(lambda t: Sub(*t)),
            st.tuples(children, children).map(lambda t: Mul(*t)),
            children.map(Neg),
        )

    return st.recursive(leaves, extend, max_leaves=4)


rel_cases = st.tuples(
    st.lists(small_domain(), min_size=2, max_size=2),
    exprs(2),
    st.sampled_from(list(RelOp)),
    exprs(2),
)


@settings(max_examples=300, deadline=None)
@given(rel_cases)
def test_rel_sound_and_bound_consistent(case):
    doms, lhs, op, rhs = case
    s = Store()
    vs = [s.new_var(d) for d in doms]
    post_rel(s, lhs, op, rhs)
    status = run(s)

    def sat(tup):
        val = lambda vid: tup[vid]
        return rel_holds(op, eval_expr(lhs, val), eval_expr(rhs, val))

    solutions = [
        t for t in itertools.product(*[list(d.values()) for d in doms]) if sat(t)
    ]
    if status is Status.FAIL:
        assert not solutions
        return
    # soundness: every solution survives propagation
    for t in solutions:
        for vid, v in enumerate(t):
            assert v in s.dom(vid)
    # bound-consistency witness over interval hulls
    used = set(expr_vars(lhs)) | set(expr_vars(rhs))
    hulls = []
    for vid in vs:
        lo, hi = s.dom(vid).bounds()
        hulls.append(range(lo, hi + 1))
    for vid in used:
        lo, hi = s.dom(vid).bounds()
        for b in (lo, hi):
            boxes = [
                [b] if u == vid else list(hulls[u]) for u in range(len(vs))
            ]
            assert any(sat(t) for t in itertools.product(*boxes)), (
                f"bound {b} of var {vid} unsupported"
            )


@settings(max_examples=200, deadline=None)
@given(st.lists(small_domain(), min_size=2, max_size=2), exprs(2), st.data())
def test_eval_bounds_encloses_and_is_monotone(doms, e, data):
    s = Store()
    vs = [s.new_var(d) for d in doms]
    lo, hi = eval_bounds(e, s)
    tup = [data.draw(st.sampled_from(list(d.values()))) for d in doms]
    v = eval_expr(e, lambda vid: tup[vid])
    assert lo <= v <= hi
    # narrowing an input never widens the enclosure
    s.set_domain(0, IntDomain.point(tup[0]))
    lo2, hi2 = eval_bounds(e, s)
    assert lo <= lo2 and hi2 <= hi
