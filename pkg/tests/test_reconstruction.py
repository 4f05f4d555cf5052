import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bump
from nlcalderon.grid import GridFunction, build_grid, interior_integral
from nlcalderon.harmonic import make_calderon_pair
from nlcalderon.reconstruction import (
    FourierSample,
    FreqLattice,
    dn_distance,
    l2_norm,
    probe_pairs,
    read_samples_csv,
    reconstruct_potential,
    recover_fourier_sample,
    stability_probe,
    write_samples_csv,
)
from nlcalderon.semilinear import SemilinearProblem


def problem(g, fn):
    return SemilinearProblem(GridFunction.from_function(g, fn), 2)


def test_lattice_geometry():
    lat = FreqLattice(1.0, 2 * math.pi)
    assert lat.step == pytest.approx(2 * math.pi)
    assert len(lat) == 13  # |kappa| <= 4 pi on the 2 pi lattice
    assert np.all(np.hypot(*lat.nodes.T) <= 2 * math.pi + 1e-12)
    assert len(FreqLattice(1.0, 0.0)) == 1
    with pytest.raises(ValueError):
        FreqLattice(0.0, 1.0)


def test_zero_frequency_gives_mean(grid33):
    s = recover_fourier_sample(problem(grid33, lambda X, Y: np.ones_like(X)), (0.0, 0.0))
    assert s.value == pytest.approx(1.0, abs=1e-8)
    assert s.kappa == (-0.0, -0.0)


def test_zero_potential_gives_zero(grid17):
    s = recover_fourier_sample(problem(grid17, lambda X, Y: 0 * X), (math.pi, 1.0))
    assert abs(s.value) < 1e-12


def test_requires_quadratic(grid17):
    p = SemilinearProblem(GridFunction.constant(grid17, 1.0), 3)
    with pytest.raises(ValueError):
        recover_fourier_sample(p, (1.0, 0.0))


@pytest.mark.parametrize("xi", [(math.pi, 0.0), (1.0, -2.5), (0.0, 2 * math.pi)])
def test_direct_matches_discrete_quadrature(grid33, xi):
    p = problem(grid33, bump)
    s = recover_fourier_sample(p, xi, "dn_direct")
    pair = make_calderon_pair(grid33, xi, "discrete")
    ref = interior_integral(p.q * pair.v1 * pair.v2)
    assert abs(s.value - ref) <= 1e-10 * max(1.0, abs(ref))


def test_fd_matches_direct(grid33):
    p = problem(grid33, bump)
    xi = (math.pi, 0.0)
    a = recover_fourier_sample(p, xi, "dn_direct").value
    b = recover_fourier_sample(p, xi, "dn_fd").value
    assert abs(a - b) <= 5e-3 * abs(a)


def test_grid_convergence_against_oracle():
    # relative errors 2.39e-3, 5.99e-4, 1.50e-4 on 33, 65, 129
    errs = []
    for n in (33, 65, 129):
        g = build_grid(n, n)
        p = problem(g, bump)
        a = recover_fourier_sample(p, (math.pi, 0.0), "dn_direct").value
        b = recover_fourier_sample(p, (math.pi, 0.0), "quadrature_oracle").value
        errs.append(abs(a - b) / abs(b))
    assert errs[1] <= 0.02
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(4.0, rel=0.05)


@settings(max_examples=10, deadline=None)
@given(x=st.floats(-6, 6), y=st.floats(-6, 6), c=st.floats(0.1, 0.9))
def test_conjugate_symmetry(x, y, c):
    g = build_grid(17, 17)
    p = problem(g, lambda X, Y: bump(X, Y, (c, 1 - c), 20.0) + X)
    a = recover_fourier_sample(p, (x, y)).value
    b = recover_fourier_sample(p, (-x, -y)).value
    assert abs(a - b.conjugate()) <= 1e-8 * max(abs(a), 1e-3)


def test_linearity_in_q(grid17):
    xi = (2.0, 1.0)
    a = recover_fourier_sample(problem(grid17, bump), xi).value
    b = recover_fourier_sample(problem(grid17, lambda X, Y: np.sin(3 * X)), xi).value
    ab = recover_fourier_sample(problem(grid17, lambda X, Y: bump(X, Y) + np.sin(3 * X)), xi).value
    assert abs(ab - a - b) <= 1e-10 * max(abs(ab), 1.0)


def test_samples_csv_roundtrip(tmp_path):
    samples = [FourierSample((0.5, -1.0), complex(0.1, -0.2), "dn_direct"),
               FourierSample((0.0, 0.0), complex(1.0, 0.0), "dn_fd")]
    write_samples_csv(samples, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "xi_x,xi_y,re,im,method"
    assert read_samples_csv(tmp_path / "s.csv") == samples


def test_reconstruct_cosine():
    g = build_grid(65, 65)
    p = problem(g, lambda X, Y: np.cos(2 * np.pi * X))
    res = reconstruct_potential(p, FreqLattice(1.0, 2 * math.pi))
    assert res.l2_rel_error <= 0.05
    assert res.imag_residue < 1e-10
    assert set(res.summary()) == {"l2_rel_error", "sup_error", "imag_residue", "radius", "L_box"}


def test_reconstruct_zero_potential(grid17):
    res = reconstruct_potential(problem(grid17, lambda X, Y: 0 * X), FreqLattice(1.0, 2 * math.pi))
    assert res.q_rec.sup_norm() < 1e-12


def test_reconstruct_rejects_small_box(grid17):
    with pytest.raises(ValueError):
        reconstruct_potential(problem(grid17, bump), FreqLattice(0.5, 1.0))


def test_reconstruct_parallel_identical(grid17):
    p = problem(grid17, bump)
    lat = FreqLattice(1.0, 2 * math.pi)
    seq = reconstruct_potential(p, lat)
    with ThreadPoolExecutor(4) as ex:
        par = reconstruct_potential(p, lat, executor=ex)
    assert np.array_equal(seq.q_rec.values, par.q_rec.values)
    assert seq.samples == par.samples


def test_probe_set_and_zero_perturbation(grid17):
    pairs = probe_pairs(grid17)
    assert len(pairs) == 16
    assert all(abs(a.sup_norm() - 1) < 1e-15 for a, _ in pairs)
    q = GridFunction.constant(grid17, 1.0)
    (row,) = stability_probe(grid17, q, [GridFunction.constant(grid17, 0.0)])
    assert row.dn_distance == 0 and row.l2_distance == 0 and row.fourier_distance is None


def test_stability_scaling_linear(grid17):
    q = GridFunction.constant(grid17, 1.0)
    pert = GridFunction.from_function(grid17, bump)
    rows = stability_probe(grid17, q, [pert * s for s in (1.0, 0.5, 0.25)],
                           lattice=FreqLattice(1.0, math.pi))
    for r0, r1 in zip(rows, rows[1:]):
        assert r1.dn_distance / r0.dn_distance == pytest.approx(0.5, rel=1e-6)
        assert r1.l2_distance / r0.l2_distance == pytest.approx(0.5, rel=1e-12)
        assert r1.fourier_distance / r0.fourier_distance == pytest.approx(0.5, rel=1e-6)


def test_dn_distance_symmetric(grid17):
    q1 = GridFunction.constant(grid17, 1.0)
    q2 = GridFunction.from_function(grid17, lambda X, Y: 1 + 0.2 * X)
    assert dn_distance(q1, q2) == pytest.approx(dn_distance(q2, q1), rel=1e-12)
    assert l2_norm(q2 - q1) == pytest.approx(0.2 / math.sqrt(3), rel=1e-3)
