from fractions import Fraction as Q

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chorex.errors import BadParams, IrrationalRootError, NotPiecewiseConstant, NotTwoAgents
from chorex.exact import rational_sqrt, roots_in
from chorex.fairness import Notion, audit
from chorex.fixtures import ex1, ex2
from chorex.model import (
    Allocation,
    Instance,
    Interval,
    Piece,
    PiecewiseDensity,
    agent_value,
    count_cuts,
    eval_value,
    value_tensor,
)
from chorex.protocols import (
    balance_function,
    contiguous_allocation,
    find_balance_point,
    lower_bound_instance,
    sandwich_allocation,
    sandwich_pieces,
    two_agent_protocol,
    uniform_allocation,
    zero_cut_instance,
)

from strategies import linear, pwc_instances, pwl_instances

C = PiecewiseDensity.constant


def two(v11, v12, v21, v22):
    return Instance(((v11, v12), (v21, v22)))


def test_balance_point_ex2_is_zero():
    inst = ex2().instance
    F = balance_function(inst)
    assert F(0) == 0 and F(Q(1, 4)) == Q(1, 8) and F(Q(3, 4)) == Q(1, 8) and F(1) == 0
    assert find_balance_point(inst) == 0


def test_balance_point_identically_zero():
    inst = two(C(Q(1, 2)), C(Q(1, 2)), C(Q(1, 2)), C(Q(1, 2)))
    assert find_balance_point(inst) == 0


def test_balance_point_half():
    inst = two(C(Q(1, 2)), C(Q(1, 2)), C(1), C(0))
    assert find_balance_point(inst) == Q(1, 2)
    alloc = two_agent_protocol(inst)
    assert agent_value(inst, alloc, 1) == Q(1, 2)


def test_two_agent_protocol_ex2():
    inst = ex2().instance
    alloc = two_agent_protocol(inst)
    assert alloc == Allocation((Piece(), Piece.of((0, 1))))
    r = audit(inst, alloc)
    assert r.proportional and r.swap_ef and r.cuts == 0 and r.per_agent_values[1] == Q(1, 2)


def test_two_agent_protocol_ex1():
    inst = ex1(2).instance
    alloc = two_agent_protocol(inst)
    assert agent_value(inst, alloc, 1) == Q(1, 2)


@given(pwc_instances(n_min=2, n_max=2, m_max=4))
def test_two_agent_guarantees_pwc(inst):
    alloc = two_agent_protocol(inst)
    r = audit(inst, alloc)
    assert r.proportional and r.swap_ef and r.cuts <= 1
    assert r.per_agent_values[1] == Q(1, 2)


@given(pwl_instances(n_min=2, n_max=2, pieces_max=2))
def test_two_agent_guarantees_pwl(inst):
    try:
        alloc = two_agent_protocol(inst)
    except IrrationalRootError:
        return  # the exact cut point is not rational
    r = audit(inst, alloc)
    assert r.proportional and r.swap_ef and r.per_agent_values[1] == Q(1, 2)


def test_two_agent_queries_go_through_callback():
    inst = ex2().instance
    calls = []

    def ev(i, j, x, y):
        calls.append((i, j))
        return inst.value(i, j, Piece.of((x, y)))

    two_agent_protocol(inst, ev)
    assert calls and all(c in {(0, 0), (0, 1), (1, 0), (1, 1)} for c in calls)


def test_not_two_agents():
    with pytest.raises(NotTwoAgents):
        two_agent_protocol(ex1(3).instance)


def test_uniform_example():
    inst = two(
        PiecewiseDensity.from_parts([(0, Q(1, 2), 1)]),
        PiecewiseDensity.from_parts([(Q(1, 2), 1, 1)]),
        C(Q(1, 2)),
        C(Q(1, 2)),
    )
    alloc = uniform_allocation(inst)
    assert alloc == Allocation.from_lists(
        [[(0, Q(1, 4)), (Q(1, 2), Q(3, 4))], [(Q(1, 4), Q(1, 2)), (Q(3, 4), 1)]]
    )
    assert count_cuts(alloc) == 3


def test_uniform_single_agent():
    inst = Instance(((C(1),),))
    assert uniform_allocation(inst) == Allocation((Piece.of((0, 1)),))


def test_uniform_rejects_pwl():
    with pytest.raises(NotPiecewiseConstant):
        uniform_allocation(Instance(((linear(0, 2),),)))


def identical_values(inst, alloc):
    W = value_tensor(inst, alloc)
    return all(len(set(W[i][j])) == 1 for i in range(inst.n) for j in range(inst.n))


@given(pwc_instances())
def test_uniform_identical_values(inst):
    assert identical_values(inst, uniform_allocation(inst))


@given(pwl_instances())
def test_sandwich_identical_values(inst):
    alloc = sandwich_allocation(inst)
    assert identical_values(inst, alloc)
    assert audit(inst, alloc).holds()


def test_sandwich_examples():
    x = linear(0, 1)
    p1, p2 = sandwich_pieces(Interval(0, 1), 2)
    assert p1 == Piece.of((0, Q(1, 4)), (Q(3, 4), 1)) and p2 == Piece.of((Q(1, 4), Q(3, 4)))
    assert eval_value(x, p1) == eval_value(x, p2) == Q(1, 4)
    two_x = linear(0, 2)
    pieces = sandwich_pieces(Interval(0, 1), 3)
    assert all(eval_value(two_x, p) == Q(1, 3) for p in pieces)
    # six slices of width 1/6; the innermost pair touches and merges
    assert [p.measure for p in pieces] == [Q(1, 3)] * 3
    assert pieces[2] == Piece.of((Q(1, 3), Q(2, 3)))


@given(
    st.integers(1, 5),
    st.fractions(0, 4, max_denominator=16),
    st.fractions(-4, 4, max_denominator=16),
    st.fractions(0, 1, max_denominator=16),
    st.fractions(0, 1, max_denominator=16),
)
def test_symmetric_pairs_share_the_average(n, a, b, lo, hi):
    # each sandwich piece of a linear density is worth exactly 1/n of the interval
    lo, hi = min(lo, hi), max(lo, hi)
    if a + b * lo < 0 or a + b * hi < 0:
        return
    d = PiecewiseDensity.from_parts([(lo, hi, a, b)])
    whole = d.integral(lo, hi)
    for p in sandwich_pieces(Interval(lo, hi), n):
        assert eval_value(d, p) == whole / n


@pytest.mark.parametrize("n", range(3, 9))
def test_lower_bound_family(n):
    eps = Q(1, 10)
    inst = lower_bound_instance(n, eps)
    assert all(inst.row_total(i) == 1 for i in range(n))
    r = audit(inst, contiguous_allocation(n))
    assert r.proportional and not r.swap_ef
    gaps = {w.gap for w in r.verdicts[Notion.SWAP_EF].witnesses}
    assert max(gaps) == Q(1, n) - Q(1, n * (n - 1))


def test_lower_bound_params():
    with pytest.raises(BadParams):
        lower_bound_instance(2, Q(1, 10))
    with pytest.raises(BadParams):
        lower_bound_instance(3, 1)


def test_zero_cut_instance():
    inst = zero_cut_instance(3)
    alloc = Allocation((Piece.of((0, 1)), Piece(), Piece()))
    r = audit(inst, alloc)
    assert r.holds() and r.cuts == 0


def test_contiguous():
    assert contiguous_allocation(2) == Allocation.from_lists([[(0, Q(1, 2))], [(Q(1, 2), 1)]])


def test_exact_roots():
    assert rational_sqrt(Q(9, 4)) == Q(3, 2) and rational_sqrt(Q(2)) is None
    assert roots_in(Q(1), Q(0), Q(-1, 4), Q(0), Q(1)) == [Q(1, 2)]
    assert roots_in(Q(0), Q(0), Q(0), Q(0), Q(1)) is None
    assert roots_in(Q(0), Q(0), Q(1), Q(0), Q(1)) == []
    assert roots_in(Q(1), Q(0), Q(-2), Q(0), Q(1)) == []  # sqrt 2 lies outside
    with pytest.raises(IrrationalRootError):
        roots_in(Q(1), Q(0), Q(-1, 2), Q(0), Q(1))
