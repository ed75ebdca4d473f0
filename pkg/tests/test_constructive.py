"""Constructive operators: worked answers, rewrite rules, and the
speculation contract (soundness, union exactness, stratification)."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratifd.arith import Add, Const, RelOp, Sub, Var, rel_holds
from stratifd.constructive import (
    FALSE,
    TRUE,
    Cd,
    Cn,
    Conj,
    ConstructiveProp,
    Cxd,
    GlobalCall,
    Imp,
    InRange,
    Ite,
    Rel,
    abs_entailed,
    ctr_vars,
    nnf,
    post,
    propagate_k,
    spec_depth,
)
from stratifd.domain import FULL, IntDomain
from stratifd.engine import UNBOUNDED, Env, Status, Store, fixpoint


def eq(v, k):
    return Rel(Var(v), RelOp.EQ, Const(k))


def post_all(store, ctrs, env):
    status = Status.EXIT
    for c in ctrs:
        status = post(store, c, env)
        if status is Status.FAIL:
            return status
    return status


def label(store, env, vids):
    """All completions of vids that survive propagation, in value order."""
    out = []

    def go():
        v = next((u for u in vids if not store.dom(u).is_singleton()), None)
        if v is None:
            out.append(tuple(store.dom(u).value() for u in vids))
            return
        for val in list(store.dom(v).values()):
            mark = store.snapshot()
            store.push_queue()
            if (
                store.set_domain(v, IntDomain.point(val))
                and fixpoint(store, env) is not Status.FAIL
            ):
                go()
            store.pop_queue()
            store.restore(mark)

    go()
    return out


# -- worked examples, full depth ----------------------------------------


def test_cd_three_way_union():
    # (X#=6) cd (X#=13) cd (X#=Y) with Y in 62..77
    s = Store()
    x = s.new_var(FULL)
    y = s.new_var(IntDomain.range(62, 77))
    f = Cd(Cd(eq(x, 6), eq(x, 13)), Rel(Var(x), RelOp.EQ, Var(y)))
    assert post(s, f, Env(k=UNBOUNDED)) is Status.SUSPEND
    assert s.dom(x) == IntDomain.from_values([6, 13]).union(
        IntDomain.range(62, 77)
    )
    assert s.dom(y) == IntDomain.range(62, 77)


def test_cd_pairwise_differences():
    # (A-B#=4) cd (B-A#=4) and (A-C#=4) cd (C-A#=4) over 1..5
    s = Store()
    a, b, c = (s.new_var(IntDomain.range(1, 5)) for _ in range(3))
    env = Env(k=UNBOUNDED)

    def diff(p, q):
        return Cd(
            Rel(Sub(Var(p), Var(q)), RelOp.EQ, Const(4)),
            Rel(Sub(Var(q), Var(p)), RelOp.EQ, Const(4)),
        )

    assert post_all(s, [diff(a, b), diff(a, c)], env) is Status.SUSPEND
    ends = IntDomain.from_values([1, 5])
    assert (s.dom(a), s.dom(b), s.dom(c)) == (ends, ends, ends)


def test_cd_false_branch_commits_other():
    s = Store()
    x = s.new_var(IntDomain.range(1, 10))
    assert post(s, Cd(FALSE, eq(x, 4)), Env(k=UNBOUNDED)) is Status.EXIT
    assert s.dom(x) == IntDomain.point(4)


def test_imp_example3_pair():
    # A,B in 1..10, (A#>1,B#<9)cd(A#>2,B#<10), (A+7#=<B)cd(cn(B+7#>A))
    # The first cd alone prunes nothing visible, but inside the second
    # cd's left speculation (A=2, B=9) it fails both branches, so the
    # second cd commits to its right branch.
    s = Store()
    a = s.new_var(IntDomain.range(1, 10))
    b = s.new_var(IntDomain.range(1, 10))
    premise = Cd(
        Conj(Rel(Var(a), RelOp.GT, Const(1)), Rel(Var(b), RelOp.LT, Const(9))),
        Conj(Rel(Var(a), RelOp.GT, Const(2)), Rel(Var(b), RelOp.LT, Const(10))),
    )
    pair = Cd(
        Rel(Add(Var(a), Const(7)), RelOp.LE, Var(b)),
        Cn(Rel(Add(Var(b), Const(7)), RelOp.GT, Var(a))),
    )
    assert post_all(s, [premise, pair], Env(k=UNBOUNDED)) is not Status.FAIL
    assert s.dom(a) == IntDomain.range(8, 10)
    assert s.dom(b) == IntDomain.range(1, 3)


def test_ite_conditional_product():
    # ite(I0#=<16, J2#=J0*I0, J2#=J0), J2#>8, J0#=2
    s = Store()
    i0, j0, j2 = s.new_var(FULL), s.new_var(FULL), s.new_var(FULL)
    env = Env(k=UNBOUNDED)
    ctrs = [
        Ite(
            Rel(Var(i0), RelOp.LE, Const(16)),
            Rel(Var(j2), RelOp.EQ, Var(j0) * Var(i0)),
            Rel(Var(j2), RelOp.EQ, Var(j0)),
        ),
        Rel(Var(j2), RelOp.GT, Const(8)),
        eq(j0, 2),
    ]
    assert post_all(s, ctrs, env) is not Status.FAIL
    assert s.dom(j0) == IntDomain.point(2)
    assert s.dom(i0) == IntDomain.range(5, 16)
    assert s.dom(j2) == IntDomain.range(10, 32)


def test_ite_true_condition():
    s = Store()
    x = s.new_var(IntDomain.range(1, 9))
    post(s, Ite(TRUE, eq(x, 3), eq(x, 7)), Env(k=UNBOUNDED))
    assert s.dom(x) == IntDomain.point(3)


def test_ite_entailed_condition():
    s = Store()
    x = s.new_var(IntDomain.range(1, 5))
    y = s.new_var(IntDomain.range(0, 9))
    f = Ite(Rel(Var(x), RelOp.GT, Const(0)), eq(y, 1), eq(y, 2))
    post(s, f, Env(k=UNBOUNDED))
    assert s.dom(y) == IntDomain.point(1)


def test_imp_entailed_antecedent():
    s = Store()
    x = s.new_var(IntDomain.range(6, 9))
    y = s.new_var(IntDomain.range(0, 3))
    post(s, Imp(Rel(Var(x), RelOp.GT, Const(5)), eq(y, 1)), Env(k=UNBOUNDED))
    assert s.dom(y) == IntDomain.point(1)


def test_imp_false_antecedent_exits():
    s = Store()
    y = s.new_var(IntDomain.range(0, 3))
    assert post(s, Imp(FALSE, eq(y, 1)), Env(k=UNBOUNDED)) is Status.EXIT
    assert s.dom(y) == IntDomain.range(0, 3)


def test_cxd_same_constraint_fails():
    s = Store()
    x = s.new_var(IntDomain.range(1, 3))
    assert post(s, Cxd(eq(x, 1), eq(x, 1)), Env(k=UNBOUNDED)) is Status.FAIL


def test_cxd_unions_exclusive_branches():
    s = Store()
    x = s.new_var(IntDomain.range(1, 5))
    assert post(s, Cxd(eq(x, 1), eq(x, 2)), Env(k=UNBOUNDED)) is Status.SUSPEND
    assert s.dom(x) == IntDomain.range(1, 2)


def test_cxd_true_branch_negates_other():
    s = Store()
    x = s.new_var(IntDomain.range(1, 5))
    post(s, Cxd(TRUE, eq(x, 3)), Env(k=UNBOUNDED))
    assert s.dom(x) == IntDomain.range(1, 5).without(3)


# -- abs-entailment ------------------------------------------------------


def test_abs_entailed_lower_bound():
    s = Store()
    x = s.new_var(IntDomain.range(1, 10))
    env = Env(k=UNBOUNDED)
    assert abs_entailed(Rel(Var(x), RelOp.GE, Const(1)), s, env)
    assert not abs_entailed(eq(x, 5), s, env)


def test_abs_entailed_through_posted_constraint():
    # X1 #=< X2 makes X1 #=< X2+1 entailed
    s = Store()
    x1 = s.new_var(IntDomain.range(2, 4))
    x2 = s.new_var(IntDomain.range(2, 4))
    env = Env(k=UNBOUNDED)
    c = Rel(Var(x1), RelOp.LE, Add(Var(x2), Const(1)))
    assert not abs_entailed(c, s, env)
    post(s, Rel(Var(x1), RelOp.LE, Var(x2)), env)
    assert abs_entailed(c, s, env)
    # entailment testing never narrows the live store
    assert s.dom(x1) == IntDomain.range(2, 4)


# -- negation rewriting --------------------------------------------------


def test_nnf_relation():
    c = Cn(Rel(Add(Var(1), Const(7)), RelOp.GT, Var(0)))
    assert nnf(c) == Rel(Add(Var(1), Const(7)), RelOp.LE, Var(0))


def test_nnf_double_negation():
    c = Conj(eq(0, 1), eq(1, 2))
    assert nnf(Cn(Cn(c))) == nnf(c)


def test_nnf_de_morgan():
    c = Cn(Conj(eq(0, 1), eq(1, 2)))
    assert nnf(c) == Cd(
        Rel(Var(0), RelOp.NE, Const(1)), Rel(Var(1), RelOp.NE, Const(2))
    )


def test_nnf_cd_negation_is_conjunction():
    c = Cn(Cd(eq(0, 1), eq(1, 2)))
    assert nnf(c) == Conj(
        Rel(Var(0), RelOp.NE, Const(1)), Rel(Var(1), RelOp.NE, Const(2))
    )


def test_nnf_in_range_complement():
    c = Cn(InRange(0, IntDomain.range(3, 5)))
    assert nnf(c) == InRange(0, IntDomain.range(3, 5).complement())


def test_nnf_ground_relations_decide():
    assert nnf(Rel(Const(2), RelOp.LT, Const(3))) == TRUE
    assert nnf(Cn(Rel(Const(2), RelOp.LT, Const(3)))) == FALSE


def test_nnf_rejects_negated_global():
    with pytest.raises(ValueError):
        nnf(Cn(GlobalCall("um3", (Var(0), Var(1), Var(2)))))


def test_nnf_removes_all_negations():
    c = Cn(Ite(eq(0, 1), Cxd(eq(0, 2), eq(1, 3)), Imp(eq(1, 4), eq(0, 5))))
    out = nnf(c)

    def no_cn(n):
        if isinstance(n, Cn):
            return False
        kids = [
            getattr(n, f) for f in ("cond", "a", "b") if hasattr(n, f)
        ]
        return all(no_cn(k) for k in kids)

    assert no_cn(out)


# -- stratified filtering ------------------------------------------------


def _ex7_formula(s, x, y):
    c1 = Cd(Cd(eq(x, 0), Cd(eq(y, 4), eq(y, 5))), eq(x, 9))
    c2 = Cd(Cd(eq(y, 9), eq(y, 6)), Cd(eq(y, 2), eq(y, 7)))
    return [c1, c2]


@pytest.mark.parametrize(
    "k,expect_x,expect_y",
    [
        (0, FULL, FULL),
        (1, FULL, FULL),
        (2, FULL, IntDomain.from_values([2, 6, 7, 9])),
        (3, IntDomain.from_values([0, 9]), IntDomain.from_values([2, 6, 7, 9])),
        (4, IntDomain.from_values([0, 9]), IntDomain.from_values([2, 6, 7, 9])),
        (
            UNBOUNDED,
            IntDomain.from_values([0, 9]),
            IntDomain.from_values([2, 6, 7, 9]),
        ),
    ],
)
def test_nested_cd_prunes_more_as_k_grows(k, expect_x, expect_y):
    s = Store()
    x, y = s.new_var(FULL), s.new_var(FULL)
    assert post_all(s, _ex7_formula(s, x, y), Env(k=k)) is Status.SUSPEND
    assert s.dom(x) == expect_x
    assert s.dom(y) == expect_y


def test_spec_depth_of_nested_formula():
    s = Store()
    x, y = 0, 1
    c1, c2 = _ex7_formula(s, x, y)
    assert spec_depth(c1) == 3
    assert spec_depth(c2) == 2
    assert spec_depth(Conj(c1, c2)) == 3


def test_k_zero_still_decides_ground_branches():
    s = Store()
    x = s.new_var(IntDomain.point(3))
    y = s.new_var(IntDomain.range(1, 9))
    # left branch is ground and false, so even k=0 commits the right one
    assert post(s, Cd(eq(x, 5), eq(y, 2)), Env(k=0)) is Status.EXIT
    assert s.dom(y) == IntDomain.point(2)


def test_propagate_k_projects_on_formula_vars():
    s = Store()
    x = s.new_var(IntDomain.range(1, 9))
    s.new_var(IntDomain.range(1, 9))  # unrelated
    env = Env(k=UNBOUNDED)
    doms, status = propagate_k(eq(x, 4), s, env)
    assert status is not Status.FAIL
    assert set(doms) == {x}
    assert doms[x] == IntDomain.point(4)
    assert s.dom(x) == IntDomain.range(1, 9)  # live store untouched


# -- random-formula properties ------------------------------------------

VALS = range(0, 5)


def truth(c, point):
    """Independent semantics of a formula under a full assignment."""
    if isinstance(c, Rel):

        def ev(e):
            if isinstance(e, Const):
                return e.value
            if isinstance(e, Var):
                return point[e.vid]
            if isinstance(e, Add):
                return ev(e.a) + ev(e.b)
            if isinstance(e, Sub):
                return ev(e.a) - ev(e.b)
            raise TypeError(e)

        return rel_holds(c.op, ev(c.lhs), ev(c.rhs))
    if isinstance(c, InRange):
        return point[c.vid] in c.dom
    if isinstance(c, Conj):
        return truth(c.a, point) and truth(c.b, point)
    if isinstance(c, Cd):
        return truth(c.a, point) or truth(c.b, point)
    if isinstance(c, Cxd):
        return truth(c.a, point) != truth(c.b, point)
    if isinstance(c, Imp):
        return not truth(c.a, point) or truth(c.b, point)
    if isinstance(c, Ite):
        return truth(c.a if truth(c.cond, point) else c.b, point)
    if isinstance(c, Cn):
        return not truth(c.a, point)
    raise TypeError(c)


def leaves():
    consts = st.integers(min_value=0, max_value=4)
    rel = st.builds(
        Rel,
        st.sampled_from([Var(0), Var(1), Add(Var(0), Const(1))]),
        st.sampled_from(list(RelOp)),
        st.one_of(consts.map(Const), st.sampled_from([Var(0), Var(1)])),
    )
    member = st.builds(
        InRange,
        st.sampled_from([0, 1]),
        st.lists(consts, min_size=1, max_size=3).map(IntDomain.from_values),
    )
    return st.one_of(rel, member)


def formulas(max_depth=3):
    return st.recursive(
        leaves(),
        lambda kids: st.one_of(
            st.builds(Conj, kids, kids),
            st.builds(Cd, kids, kids),
            st.builds(Cxd, kids, kids),
            st.builds(Imp, kids, kids),
            st.builds(Cn, kids),
            st.builds(Ite, kids, kids, kids),
        ),
        max_leaves=4,
    )


@settings(max_examples=150, deadline=None)
@given(formulas())
def test_nnf_complements_the_solution_set(c):
    f = nnf(Cn(c))
    for a in VALS:
        for b in VALS:
            point = {0: a, 1: b}
            assert truth(c, point) != truth(f, point)


@settings(max_examples=100, deadline=None)
@given(formulas(), st.sampled_from([0, 1, 2, UNBOUNDED]))
def test_labeling_solutions_match_truth_at_any_k(c, k):
    expected = sorted(
        (a, b)
        for a in VALS
        for b in VALS
        if truth(c, {0: a, 1: b})
    )
    s = Store()
    x = s.new_var(IntDomain.range(0, 4))
    y = s.new_var(IntDomain.range(0, 4))
    env = Env(k=k)
    if post(s, c, env) is Status.FAIL:
        assert expected == []
        return
    assert sorted(label(s, env, (x, y))) == expected


@settings(max_examples=100, deadline=None)
@given(formulas())
def test_pruning_is_monotone_in_k(c):
    prev = None
    for k in (0, 1, 2, 3, UNBOUNDED):
        s = Store()
        s.new_var(IntDomain.range(0, 4))
        s.new_var(IntDomain.range(0, 4))
        if post(s, c, Env(k=k)) is Status.FAIL:
            doms = (IntDomain.from_values([]), IntDomain.from_values([]))
        else:
            doms = (s.dom(0), s.dom(1))
        if prev is not None:
            assert doms[0] == doms[0].intersect(prev[0])
            assert doms[1] == doms[1].intersect(prev[1])
        prev = doms


@settings(max_examples=80, deadline=None)
@given(formulas(), formulas())
def test_suspended_cd_narrows_to_exact_branch_union(c1, c2):
    s = Store()
    s.new_var(IntDomain.range(0, 4))
    s.new_var(IntDomain.range(0, 4))
    env = Env(k=UNBOUNDED)
    d1, st1 = propagate_k(c1, s, env)
    d2, st2 = propagate_k(c2, s, env)
    prop = ConstructiveProp(c1, c2)
    pre = {v: s.dom(v) for v in prop.allvars}
    status = prop.filter(s, env)
    if status is not Status.SUSPEND:
        return
    assert st1 is not Status.FAIL and st2 is not Status.FAIL
    for v in prop.allvars:
        left = d1.get(v, pre[v])
        right = d2.get(v, pre[v])
        assert s.dom(v) == left.union(right)
