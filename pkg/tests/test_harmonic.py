import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlcalderon.errors import FrequencyTooLarge
from nlcalderon.grid import BoundaryFunction, GridFunction, boundary_integral, build_grid
from nlcalderon.harmonic import (
    is_discretely_harmonic,
    laplace_operator,
    linear_dn,
    make_calderon_pair,
    rotate90,
    solve_laplace_dirichlet,
)


def test_constants_and_linears_are_reproduced(grid17):
    v = solve_laplace_dirichlet(grid17, BoundaryFunction.constant(grid17, 2.5))
    assert np.allclose(v.values, 2.5, rtol=0, atol=1e-13)
    X, _ = grid17.coords
    v = solve_laplace_dirichlet(grid17, BoundaryFunction.from_function(grid17, lambda x, y: x))
    assert np.max(np.abs(v.values - X)) < 1e-13


def test_exponential_second_order():
    xi, k = np.array([np.pi, 0.0]), np.array([0.0, np.pi])

    def exact(X, Y):
        return np.real(np.exp((k[0] + 1j * xi[0]) * X + (k[1] + 1j * xi[1]) * Y))

    errs = []
    for n in (17, 33, 65):
        g = build_grid(n, n)
        v = solve_laplace_dirichlet(g, BoundaryFunction.from_function(g, exact))
        ref = exact(*g.coords)
        errs.append(np.max(np.abs(v.values - ref)) / np.max(np.abs(ref)))
    # relative sup errors from a refinement run: 2.12e-3, 5.41e-4, 1.36e-4
    assert errs[1] < 6e-4
    for a, b in zip(errs, errs[1:]):
        assert 3.6 < a / b < 4.4


def test_linear_dn_examples(grid17):
    assert np.all(np.abs(linear_dn(grid17, BoundaryFunction.constant(grid17, 1.0)).values) < 1e-13)
    d = linear_dn(grid17, BoundaryFunction.from_function(grid17, lambda x, y: x))
    assert np.allclose(d.values, grid17.normals[:, 0], atol=1e-12)


def _random_trace(g, rng):
    return BoundaryFunction(g, rng.standard_normal(g.n_boundary))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linear_dn_linear_and_self_adjoint(seed, a, b):
    g = build_grid(13, 9, (0.0, 0.0, 1.5, 1.0))
    rng = np.random.default_rng(seed)
    f, h = _random_trace(g, rng), _random_trace(g, rng)
    Lf, Lh = linear_dn(g, f), linear_dn(g, h)
    comb = linear_dn(g, f * a + h * b)
    assert (comb - (Lf * a + Lh * b)).sup_norm() <= 1e-12 * max(1.0, (Lf * a + Lh * b).sup_norm()) * 10
    s1, s2 = boundary_integral(Lf * h), boundary_integral(f * Lh)
    assert abs(s1 - s2) <= 1e-10 * max(abs(s1), Lf.sup_norm() * h.sup_norm())
    assert abs(boundary_integral(Lf)) <= 1e-10 * f.sup_norm()


def test_calderon_pair_examples(grid17):
    pair = make_calderon_pair(grid17, (0.0, 0.0), "sampled")
    assert np.all(pair.v1.values == 1) and np.all(pair.v2.values == 1)
    pair = make_calderon_pair(grid17, (np.pi, 0.0), "sampled")
    assert np.allclose(pair.k, [0.0, np.pi])
    X, _ = grid17.coords
    assert np.max(np.abs((pair.v1 * pair.v2).values - np.exp(2j * np.pi * X))) < 1e-13
    with pytest.raises(FrequencyTooLarge):
        make_calderon_pair(grid17, (20.0, 0.0))
    with pytest.raises(FrequencyTooLarge):
        make_calderon_pair(grid17, (3.0, 0.0), ximax=2.0)


def test_rotation_convention():
    assert np.allclose(rotate90([1.0, 0.0]), [0.0, 1.0])
    assert np.allclose(rotate90([0.0, 2.0]), [-2.0, 0.0])


@pytest.mark.parametrize("xi", [(np.pi, 0.0), (1.0, -2.0), (0.0, 3 * np.pi)])
def test_discrete_pair_is_harmonic(grid33, xi):
    pair = make_calderon_pair(grid33, xi, "discrete")
    assert is_discretely_harmonic(pair.v1) and is_discretely_harmonic(pair.v2)
    assert not is_discretely_harmonic(GridFunction.from_function(grid33, lambda X, Y: X * X))


def test_concurrent_solves_match_sequential(grid33):
    op = laplace_operator(grid33)
    rng = np.random.default_rng(5)
    rhs = [rng.standard_normal(grid33.n_boundary) for _ in range(16)]
    expected = [op.solve_dirichlet(f) for f in rhs]
    got = [None] * len(rhs)

    def work(i):
        got[i] = op.solve_dirichlet(rhs[i])

    threads = [threading.Thread(target=work, args=(i,)) for i in range(len(rhs))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for a, b in zip(expected, got):
        assert np.array_equal(a, b)
