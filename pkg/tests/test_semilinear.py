import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlcalderon.errors import NonConvergence
from nlcalderon.grid import (
    BoundaryFunction,
    GridFunction,
    boundary_integral,
    build_grid,
    interior_integral,
    normal_derivative,
)
from nlcalderon.harmonic import linear_dn, solve_laplace_dirichlet
from nlcalderon.semilinear import (
    DELTA_CAP,
    SemilinearProblem,
    SolveReport,
    contraction_factor,
    estimate_delta,
    nonlinear_dn,
    picard_solve,
    solve_semilinear,
)

# regression baseline: bisection result for q = 1, m = 2, 33x33 unit square
DELTA_Q1_M2_33 = 1.3867080006304904


@pytest.fixture(scope="module")
def unit_problem(grid33):
    return SemilinearProblem(GridFunction.constant(grid33, 1.0), 2)


def test_problem_validation(grid17):
    with pytest.raises(ValueError):
        SemilinearProblem(GridFunction.constant(grid17, 1.0), 1)
    with pytest.raises(ValueError):
        SemilinearProblem(GridFunction.constant(grid17, 1.0 + 1j), 2)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_zero_data_gives_zero(grid17, m):
    p = SemilinearProblem(GridFunction.from_function(grid17, lambda X, Y: 1 + X * Y), m)
    u, rep = solve_semilinear(p, BoundaryFunction.constant(grid17, 0.0))
    assert rep.converged and rep.iterations == 0
    assert np.all(u.values == 0)
    assert np.all(nonlinear_dn(p, BoundaryFunction.constant(grid17, 0.0)).values == 0)


def test_zero_potential_is_laplace(grid17):
    p = SemilinearProblem(GridFunction.constant(grid17, 0.0), 2)
    f = BoundaryFunction.from_function(grid17, lambda x, y: np.sin(3 * x) + y)
    u, rep = solve_semilinear(p, f)
    # the harmonic starting guess is already the solution
    assert rep.iterations <= 1
    assert np.max(np.abs(u.values - solve_laplace_dirichlet(grid17, f).values)) < 1e-13
    assert (nonlinear_dn(p, f) - linear_dn(grid17, f)).sup_norm() < 1e-10


def test_newton_matches_picard(unit_problem, grid33):
    f = BoundaryFunction.constant(grid33, 0.01)
    u, rep = solve_semilinear(unit_problem, f)
    assert rep.converged and rep.iterations <= 5 and rep.norm_ratio <= 1.5
    assert rep.final_residual <= rep.tolerance
    v = picard_solve(unit_problem, f, tol=1e-14)
    assert np.max(np.abs(u.values - v.values)) <= 1e-10


def test_report_json_keys():
    rep = SolveReport(True, 3, 1e-13, 1.02)
    assert rep.to_dict() == {"converged": True, "iterations": 3,
                             "final_residual": 1e-13, "norm_ratio": 1.02}


def test_convergence_order_estimate():
    rep = SolveReport(True, 4, 1e-16, 1.0, tolerance=1e-14,
                      residual_history=[1e-1, 1e-2, 1e-4, 1e-8, 1e-16])
    assert rep.convergence_order() == pytest.approx(2.0)
    rep.residual_history = [1e-1, 1e-16]
    assert rep.convergence_order() is None


def test_delta_zero_potential_is_cap(grid17):
    p = SemilinearProblem(GridFunction.constant(grid17, 0.0), 2)
    assert estimate_delta(p) == DELTA_CAP


@pytest.mark.slow
def test_delta_regression_and_scaling(unit_problem):
    d = estimate_delta(unit_problem)
    assert 0 < d < np.inf
    assert d == pytest.approx(DELTA_Q1_M2_33, rel=1e-12)
    for lam in (2.0, 4.0):
        assert estimate_delta(unit_problem.scaled(lam)) * lam / d == pytest.approx(1.0, rel=0.05)


def test_large_data_fails(unit_problem, grid33):
    with pytest.raises(NonConvergence) as exc:
        solve_semilinear(unit_problem, BoundaryFunction.constant(grid33, 10 * DELTA_Q1_M2_33))
    assert exc.value.iterations > 0


def test_uniqueness_check(unit_problem, grid33):
    f = BoundaryFunction.constant(grid33, -0.5 * DELTA_Q1_M2_33)
    _, rep = solve_semilinear(unit_problem, f, check_uniqueness=True)
    assert rep.uniqueness_gap <= 1e-10


def test_contraction_factor_linear_in_q(unit_problem, grid33):
    u = GridFunction.constant(grid33, 0.1)
    c1 = contraction_factor(unit_problem, u)
    assert c1 > 0
    assert contraction_factor(unit_problem.scaled(3.0), u) == pytest.approx(3 * c1, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 4), amp=st.floats(1e-3, 0.3))
def test_green_identity_for_solutions(seed, m, amp):
    g = build_grid(11, 11)
    rng = np.random.default_rng(seed)
    p = SemilinearProblem(GridFunction(g, rng.uniform(-1, 1, g.shape)), m)
    f = BoundaryFunction(g, amp * rng.uniform(-1, 1, g.n_boundary))
    u, rep = solve_semilinear(p, f)
    assert rep.final_residual <= rep.tolerance
    # flux balance: boundary integral of the flux equals the integral of Lap u = -q u^m
    flux = normal_derivative(u, p.source(u))
    lap = interior_integral(p.source(u))
    assert abs(boundary_integral(flux) - lap) <= 1e-9 * max(1.0, abs(lap))
