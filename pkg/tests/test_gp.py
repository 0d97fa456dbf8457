import random

import numpy as np
import pytest

from dyndl.errors import PointOutOfDomain
from dyndl.gp import (
    GPOptions,
    GPProblem,
    Monomial,
    Posynomial,
    gradient_check,
    monomial,
    solve_gp,
)

from _oracles import grid_search_gp, random_gp


def box(n, lo=0.01, hi=100.0):
    return tuple(lo for _ in range(n)), tuple(hi for _ in range(n))


def test_am_gm_case():
    # min x + 1/x -> x = 1, objective 2
    lo, hi = box(1)
    prob = GPProblem(1, Posynomial.make([(1.0, {0: 1}), (1.0, {0: -1})]), (), lo, hi)
    sol = solve_gp(prob)
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(1.0, rel=1e-4)
    assert sol.objective_value == pytest.approx(2.0, rel=1e-6)


def test_two_var_constrained():
    # min 1/(x y) s.t. (x + y)/2 <= 1 -> x = y = 1
    lo, hi = box(2)
    prob = GPProblem(
        2,
        Posynomial.make([(1.0, {0: -1, 1: -1})]),
        (Posynomial.make([(0.5, {0: 1}), (0.5, {1: 1})]),),
        lo, hi,
    )
    sol = solve_gp(prob)
    assert sol.status == "optimal"
    assert sol.values == pytest.approx([1.0, 1.0], rel=1e-4)
    # grid-search oracle agrees
    _, f_grid = grid_search_gp(prob)
    assert sol.objective_value <= f_grid * (1 + 1e-6)
    assert sol.objective_value == pytest.approx(f_grid, rel=1e-2)


def test_infeasible_certified():
    # x >= 2 and x <= 0.5 simultaneously
    lo, hi = box(1)
    prob = GPProblem(
        1, monomial(1.0, {0: 1}),
        (Posynomial.make([(2.0, {0: -1})]), Posynomial.make([(2.0, {0: 1})])),
        lo, hi,
    )
    assert solve_gp(prob).status == "infeasible"


def test_scale_invariance_of_argmin():
    lo, hi = box(2)
    base = GPProblem(
        2,
        Posynomial.make([(1.0, {0: -1, 1: -1})]),
        (Posynomial.make([(0.5, {0: 1}), (0.5, {1: 1})]),),
        lo, hi,
    )
    scaled = GPProblem(
        2,
        Posynomial.make([(7.3, {0: -1, 1: -1})]),
        base.constraints,
        lo, hi,
    )
    a = solve_gp(base)
    b = solve_gp(scaled)
    assert a.values == pytest.approx(b.values, rel=1e-6)
    assert b.objective_value == pytest.approx(7.3 * a.objective_value, rel=1e-9)


def test_determinism_bit_identical():
    rng = random.Random(42)
    prob = random_gp(rng)
    a = solve_gp(prob)
    b = solve_gp(prob)
    assert a.status == b.status
    assert np.array_equal(a.values, b.values)
    assert a.objective_value == b.objective_value


def test_constraints_feasible_at_solution():
    rng = random.Random(17)
    checked = 0
    while checked < 25:
        prob = random_gp(rng)
        sol = solve_gp(prob)
        if sol.status != "optimal":
            continue
        for cons in prob.constraints:
            assert cons.evaluate(sol.values) <= 1.0 + 1e-8
        assert np.all(sol.values >= np.array(prob.lower) * (1 - 1e-9))
        assert np.all(sol.values <= np.array(prob.upper) * (1 + 1e-9))
        checked += 1


def test_oracle_equivalence_sample():
    rng = random.Random(23)
    compared = 0
    while compared < 20:
        prob = random_gp(rng)
        x_grid, f_grid = grid_search_gp(prob)
        sol = solve_gp(prob)
        if x_grid is None:
            # grid found nothing feasible; solver must agree or the set is thin
            continue
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(f_grid, rel=1e-2)
        compared += 1


def test_gradient_check_monomial():
    # x^2 at x = 3
    prob = GPProblem(1, monomial(1.0, {0: 2}), (), (0.1,), (10.0,))
    assert gradient_check(prob, [3.0]) < 1e-6


def test_gradient_check_posynomial():
    prob = GPProblem(
        1, Posynomial.make([(1.0, {0: 1}), (1.0, {0: -1})]), (), (0.1,), (10.0,)
    )
    assert gradient_check(prob, [2.0]) < 1e-6


def test_gradient_check_domain():
    prob = GPProblem(1, monomial(1.0, {0: 2}), (), (0.1,), (10.0,))
    with pytest.raises(PointOutOfDomain):
        gradient_check(prob, [0.05])


def test_monomial_requires_positive_coefficient():
    with pytest.raises(ValueError):
        Monomial.make(-1.0, {0: 1})
    with pytest.raises(ValueError):
        Posynomial.make([])


def test_trace_collection():
    lo, hi = box(1)
    prob = GPProblem(1, Posynomial.make([(1.0, {0: 1}), (1.0, {0: -1})]), (), lo, hi)
    sol = solve_gp(prob, collect_trace=True)
    assert sol.trace
    assert sol.trace[-1]["gap_estimate"] <= GPOptions().rel_tolerance


def test_tight_tolerance_option():
    lo, hi = box(1)
    prob = GPProblem(1, Posynomial.make([(1.0, {0: 1}), (1.0, {0: -1})]), (), lo, hi)
    sol = solve_gp(prob, GPOptions(rel_tolerance=1e-9))
    assert sol.objective_value == pytest.approx(2.0, rel=1e-9)
