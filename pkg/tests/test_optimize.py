from fractions import Fraction as Q

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chorex.errors import InfeasibleModel, InvalidFractions
from chorex.fairness import audit
from chorex.fixtures import ex2
from chorex.model import (
    Allocation,
    Instance,
    Piece,
    PiecewiseDensity,
    count_cuts,
    eval_value,
    social_cost,
)
from chorex.optimize import (
    FractionMatrix,
    LpMode,
    build_lp,
    greedy_optimal,
    optimal_fair_allocation,
    random_feasible_fractions,
    realize_fractions,
    solve_lp,
)
from chorex.oracle import GridSpec, NoFeasible, PropertySpec, brute_force_optimal
from chorex.protocols import lower_bound_instance, uniform_allocation
from chorex.simplex import LpStatus

from strategies import linear, pwc_instances, pwl_instances, seeds

C = PiecewiseDensity.constant


def test_greedy_ex2():
    inst = ex2().instance
    alloc = greedy_optimal(inst)
    assert alloc == Allocation.from_lists([[(Q(1, 2), 1)], [(0, Q(1, 2))]])
    assert social_cost(inst, alloc) == Q(3, 4)


def test_greedy_single_agent():
    inst = Instance(((linear(0, 2),),))
    assert greedy_optimal(inst) == Allocation((Piece.of((0, 1)),))


def test_greedy_free_agent_takes_everything():
    inst = Instance(((C(0), C(1)), (C(0), C(1))))
    alloc = greedy_optimal(inst)
    assert alloc == Allocation((Piece.of((0, 1)), Piece()))
    assert social_cost(inst, alloc) == 0 and count_cuts(alloc) == 0


@given(pwc_instances(m_max=4))
def test_greedy_has_at_most_m_minus_one_cuts(inst):
    assert count_cuts(greedy_optimal(inst)) <= inst.m - 1


def test_build_lp_ex2_shape():
    p = build_lp(ex2().instance, LpMode.PROPORTIONAL_SWAP_EF)
    assert p.num_vars == 4 and p.num_bounds == 4
    assert len(p.A_eq) == 2
    assert [lbl.split()[0] for lbl in p.ub_labels] == ["prop", "prop", "swapef", "swapef"]
    assert build_lp(ex2().instance, LpMode.UNCONSTRAINED).A_ub == []


def test_swap_stable_rows():
    inst = lower_bound_instance(4, Q(1, 10))
    p = build_lp(inst, LpMode.SWAP_STABLE)
    assert len(p.A_ub) == 4 + 4 * 6


def test_solve_ex2():
    sol = solve_lp(build_lp(ex2().instance, LpMode.PROPORTIONAL_SWAP_EF))
    assert sol.status is LpStatus.OPTIMAL and sol.objective == Q(3, 4)
    assert sol.fractions.x == ((0, 1), (1, 0))


def test_single_agent_lp():
    inst = Instance(((PiecewiseDensity.from_parts([(0, Q(1, 2), 1), (Q(1, 2), 1, 1)]),),))
    sol = solve_lp(build_lp(inst, LpMode.PROPORTIONAL_SWAP_EF))
    assert sol.objective == 1 and sol.fractions.x == ((1, 1),)
    res = optimal_fair_allocation(inst)
    assert res.allocation == Allocation((Piece.of((0, 1)),)) and res.report.holds()


@given(pwc_instances())
def test_unconstrained_lp_matches_greedy_pwc(inst):
    sol = solve_lp(build_lp(inst, LpMode.UNCONSTRAINED))
    assert sol.objective == social_cost(inst, greedy_optimal(inst))


@given(pwl_instances())
def test_unconstrained_lp_matches_greedy_pwl(inst):
    sol = solve_lp(build_lp(inst, LpMode.UNCONSTRAINED))
    assert sol.objective == social_cost(inst, greedy_optimal(inst))


@given(pwc_instances())
def test_uniform_fractions_always_feasible(inst):
    u = FractionMatrix.uniform(inst.n, inst.m)
    for mode in LpMode:
        assert build_lp(inst, mode).is_feasible(u)


def test_realize_examples():
    inst = Instance(((C(1), C(0)), (C(0), C(1))))
    fr = FractionMatrix(((Q(1, 2),), (Q(1, 2),)))
    alloc = realize_fractions(inst, fr)
    assert alloc == Allocation.from_lists([[(0, Q(1, 2))], [(Q(1, 2), 1)]])
    x = Instance(((linear(0, 2),),))
    half = FractionMatrix(((Q(1, 2),),))
    with pytest.raises(InvalidFractions):
        realize_fractions(x, half)
    two = Instance(((linear(0, 1), C(Q(1, 2))), (C(Q(1, 2)), linear(0, 1))))
    alloc = realize_fractions(two, FractionMatrix(((Q(1, 2),), (Q(1, 2),))))
    assert alloc[0] == Piece.of((0, Q(1, 4)), (Q(3, 4), 1))
    assert eval_value(linear(0, 1), alloc[0]) == Q(1, 4)


def test_realize_whole_intervals_matches_greedy():
    inst = ex2().instance
    alloc = realize_fractions(inst, FractionMatrix(((0, 1), (1, 0))))
    assert alloc == greedy_optimal(inst)


def test_invalid_fractions():
    inst = ex2().instance
    with pytest.raises(InvalidFractions):
        realize_fractions(inst, FractionMatrix(((1, 1), (1, 0))))
    with pytest.raises(InvalidFractions):
        realize_fractions(inst, FractionMatrix(((Q(3, 2), 0), (Q(-1, 2), 1))))
    with pytest.raises(InvalidFractions):
        realize_fractions(inst, FractionMatrix(((1,), (0,))))


@st.composite
def fractions_for(draw, inst):
    rng = np.random.default_rng(draw(seeds))
    w = rng.integers(0, 5, size=(inst.n, inst.m))
    w[:, w.sum(axis=0) == 0] = 1
    cols = w.sum(axis=0)
    return FractionMatrix(
        tuple(tuple(Q(int(w[i, k]), int(cols[k])) for k in range(inst.m)) for i in range(inst.n))
    )


def realized_values_match(inst, fr):
    alloc = realize_fractions(inst, fr)
    vals = inst.interval_values()
    for i in range(inst.n):
        for j in range(inst.n):
            want = sum((fr.x[j][k] * vals[i][j][k] for k in range(inst.m)), Q(0))
            assert inst.value(i, j, alloc[j]) == want


@given(st.data(), pwc_instances())
def test_realization_exact_pwc(data, inst):
    realized_values_match(inst, data.draw(fractions_for(inst)))


@given(st.data(), pwl_instances())
def test_realization_exact_pwl(data, inst):
    realized_values_match(inst, data.draw(fractions_for(inst)))


def test_optimal_fair_ex2():
    res = optimal_fair_allocation(ex2().instance)
    assert res.report.social_cost == Q(3, 4) and res.report.proportional and res.report.swap_ef


def test_lower_bound_feasible_and_no_worse_than_uniform():
    inst = lower_bound_instance(3, Q(1, 10))
    res = optimal_fair_allocation(inst)
    assert res.report.proportional and res.report.swap_ef
    assert res.report.social_cost <= social_cost(inst, uniform_allocation(inst))


@given(pwc_instances(n_min=2), st.sampled_from(list(LpMode)))
def test_every_mode_is_certified_by_audit(inst, mode):
    eps = Q(1, 20) if mode is LpMode.PROPORTIONAL_EPS_SWAP_EF else 0
    res = optimal_fair_allocation(inst, mode, eps)
    assert res.report.satisfies(mode.notions)
    assert res.report.social_cost == res.solution.objective


@given(pwl_instances(n_min=2, n_max=2, pieces_max=2))
def test_pwl_mode_is_certified_by_audit(inst):
    res = optimal_fair_allocation(inst)
    assert res.report.proportional and res.report.swap_ef


@given(pwc_instances(n_min=2, n_max=3, m_max=3), seeds)
def test_lp_beats_random_feasible_matrices(inst, seed):
    p = build_lp(inst, LpMode.PROPORTIONAL_SWAP_EF)
    best = solve_lp(p).objective
    for fr in random_feasible_fractions(p, np.random.default_rng(seed), 20):
        assert p.is_feasible(fr) and best <= p.objective(fr)


@given(pwc_instances(n_min=2, n_max=3, m_max=2))
def test_lp_between_greedy_and_brute_force(inst):
    lp = solve_lp(build_lp(inst, LpMode.PROPORTIONAL_SWAP_EF)).objective
    assert lp >= social_cost(inst, greedy_optimal(inst))
    try:
        _, brute = brute_force_optimal(inst, GridSpec(2), PropertySpec.of(["prop", "swapef"]))
    except NoFeasible:
        return
    assert lp <= brute


def test_infeasible_model_carries_certificate():
    inst = Instance(((C(3),),), strict=False)
    with pytest.raises(InfeasibleModel) as exc:
        optimal_fair_allocation(inst, LpMode.PROPORTIONAL)
    assert exc.value.certificate and exc.value.to_doc()["certificate"]


def test_lp_text_format():
    text = build_lp(ex2().instance, LpMode.PROPORTIONAL_SWAP_EF).to_text()
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert rows[0] == "min 5/8 3/8 3/8 5/8"
    assert rows[1].startswith("= 1 0 1 0 1")
    assert sum(r.startswith("<=") for r in rows) == 4


def test_warm_start_agrees_with_cold():
    from chorex.oracle import random_pwc_instance

    inst = random_pwc_instance(3, 12, np.random.default_rng(5))
    p = build_lp(inst, LpMode.PROPORTIONAL_SWAP_EF)
    cold, warm = solve_lp(p, warm_start=False), solve_lp(p, warm_start=True)
    assert cold.objective == warm.objective
    assert p.is_feasible(warm.fractions)
