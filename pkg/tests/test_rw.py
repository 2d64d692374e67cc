from fractions import Fraction as Q

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from chorex.errors import BadRange, IrrationalRootError, SchemaError, Unreachable
from chorex.fixtures import ex1, ex2
from chorex.model import Piece
from chorex.optimize import greedy_optimal
from chorex.protocols import two_agent_protocol
from chorex.rw import QueryLedger, QuerySession, cut, evaluate, query_count, replay

from strategies import pwc_instances, pwl_instances, unit, unit_pairs


def test_evaluate_examples():
    assert evaluate(ex2().instance, 0, 0, 0, Q(1, 2)) == Q(3, 8)
    assert evaluate(ex2().instance, 1, 0, Q(1, 3), Q(1, 3)) == 0
    assert evaluate(ex1(3).instance, 0, 1, Q(1, 3), Q(2, 3)) == Q(1, 3)


def test_cut_examples():
    assert cut(ex2().instance, 0, 0, 0, Q(3, 8)) == Q(1, 2)
    assert cut(ex2().instance, 1, 1, Q(1, 5), 0) == Q(1, 5)
    # leftmost point: the density is zero before 1/3
    assert cut(ex1(3).instance, 0, 1, 0, Q(1, 3)) == Q(2, 3)
    assert cut(ex1(3).instance, 0, 1, 0, Q(1, 6)) == Q(1, 2)


def test_cut_on_plateau_returns_leftmost():
    # density 1 on [0,1/3]: after 1/3 nothing more accrues
    assert cut(ex1(3).instance, 0, 0, 0, Q(1, 3)) == Q(1, 3)


def test_errors():
    inst = ex2().instance
    with pytest.raises(BadRange):
        evaluate(inst, 0, 0, Q(1, 2), Q(1, 4))
    with pytest.raises(BadRange):
        evaluate(inst, 0, 0, 0, 2)
    with pytest.raises(Unreachable) as exc:
        cut(inst, 0, 0, Q(1, 2), Q(1, 2))
    assert exc.value.shortfall == Q(1, 2) - Q(1, 8)


@given(pwc_instances(), st.integers(0, 8), st.integers(0, 8), unit, unit)
def test_inverse_consistency_pwc(inst, i, j, x, t):
    i, j = i % inst.n, j % inst.n
    alpha = t * evaluate(inst, i, j, x, 1)
    y = cut(inst, i, j, x, alpha)
    assert x <= y <= 1 and evaluate(inst, i, j, x, y) == alpha


@given(pwl_instances(), st.integers(0, 8), st.integers(0, 8), unit, unit)
def test_inverse_consistency_pwl(inst, i, j, x, y0):
    # choose alpha as a value the cut can hit rationally
    i, j = i % inst.n, j % inst.n
    assume(y0 >= x)
    alpha = evaluate(inst, i, j, x, y0)
    y = cut(inst, i, j, x, alpha)
    assert y <= y0 and evaluate(inst, i, j, x, y) == alpha


@given(pwc_instances(), unit, unit_pairs())
def test_cut_monotone_in_alpha(inst, x, ts):
    total = evaluate(inst, 0, 0, x, 1)
    a, b = ts[0] * total, ts[1] * total
    assert cut(inst, 0, 0, x, a) <= cut(inst, 0, 0, x, b)


def test_session_counts_and_reset():
    s = QuerySession(ex2().instance)
    assert s.query_count()["total"] == 0
    s.evaluate(0, 1, 0, 1)
    s.cut(1, 0, 0, Q(1, 4))
    s.cut(1, 0, 0, Q(1, 4))
    doc = s.query_count()
    assert (doc["eval"], doc["cut"], doc["total"]) == (1, 2, 3)
    assert {"i": 2, "j": 1, "eval": 0, "cut": 2} in doc["pairs"]
    s.reset()
    assert s.query_count()["total"] == 0
    assert query_count(QueryLedger())["total"] == 0


@given(pwc_instances())
def test_greedy_uses_m_n_squared_queries(inst):
    s = QuerySession(inst)
    greedy_optimal(inst, s.evaluate)
    assert s.ledger.evals == inst.m * inst.n**2 and s.ledger.cuts == 0


def test_two_agent_protocol_count_is_recorded():
    s = QuerySession(ex2().instance)
    two_agent_protocol(s.instance, s.evaluate)
    assert s.ledger.total > 0


def test_replay_script():
    s = QuerySession(ex2().instance)
    out = replay(s, ["# header", "eval 1 1 0 1/2", "", "cut 1 1 0 3/8  # inverse"])
    assert [a["answer"] for a in out] == ["3/8", "1/2"]
    assert [a["line"] for a in out] == [2, 4]
    with pytest.raises(SchemaError):
        replay(s, ["swap 1 2"])


def test_irrational_cut_is_reported():
    from chorex.model import Instance, PiecewiseDensity

    inst = Instance(((PiecewiseDensity.from_parts([(0, 1, 0, 2)]),),))
    # integral of 2x from 0 to y is y^2; y^2 = 1/2 has no rational solution
    with pytest.raises(IrrationalRootError):
        cut(inst, 0, 0, 0, Q(1, 2))
    assert cut(inst, 0, 0, 0, Q(1, 4)) == Q(1, 2)
    assert inst.value(0, 0, Piece.of((0, Q(1, 2)))) == Q(1, 4)
