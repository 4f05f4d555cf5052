"""Structural checks: conformal gauge invariance and completeness of harmonic products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import GaugeViolation
from .grid import BoundaryFunction, Grid, GridFunction, normal_derivative
from .harmonic import laplace_operator
from .semilinear import DEFAULT_TOL, SemilinearProblem, SemilinearSystem, nonlinear_dn, solve_system


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    sigma: GridFunction

    def __post_init__(self):
        s = self.sigma.values
        if np.iscomplexobj(s) or not np.all(s > 0):
            raise ValueError("conformal factor must be real and positive")

    @property
    def boundary_is_one(self) -> bool:
        return bool(np.all(np.abs(self.sigma.trace().values - 1.0) <= 1e-14))


def _scaled_operator(grid: Grid, inv_sigma: np.ndarray):
    """Row-scaled 5-point operator ``sigma^-1 Lap_h``, assembled from scratch."""
    nx, h2 = grid.nx, grid.h**2
    pos = -np.ones(grid.n_nodes, dtype=int)
    pos[grid.interior_index] = np.arange(grid.n_interior)
    bpos = -np.ones(grid.n_nodes, dtype=int)
    bpos[grid.boundary_index] = np.arange(grid.n_boundary)
    rows_a, cols_a, vals_a = [], [], []
    rows_b, cols_b, vals_b = [], [], []
    for r, k in enumerate(grid.interior_index):
        for kk, c in ((k, -4.0), (k - 1, 1.0), (k + 1, 1.0), (k - nx, 1.0), (k + nx, 1.0)):
            v = (c / h2) * inv_sigma[r]
            if pos[kk] >= 0:
                rows_a.append(r), cols_a.append(pos[kk]), vals_a.append(v)
            else:
                rows_b.append(r), cols_b.append(bpos[kk]), vals_b.append(v)
    n, nb = grid.n_interior, grid.n_boundary
    A = sp.csc_matrix((vals_a, (rows_a, cols_a)), shape=(n, n))
    B = sp.csr_matrix((vals_b, (rows_b, cols_b)), shape=(n, nb))
    A.sort_indices()
    B.sort_indices()
    return A, B


def gauge_check(p: SemilinearProblem, sigma: ConformalFactor, f: BoundaryFunction,
                tol=DEFAULT_TOL) -> float:
    """Sup difference between the DN maps of ``(1, q)`` and ``(sigma, q / sigma)``.

    The transformed equation ``sigma^-1 Lap u + (sigma^-1 q) u^m = 0`` is
    assembled and solved on its own; its flux uses the boundary mass of the
    rescaled area element ``sigma dx``.
    """
    if not sigma.boundary_is_one:
        raise GaugeViolation("conformal factor must equal 1 on the boundary")
    g = p.grid
    if sigma.sigma.grid != g:
        raise ValueError("conformal factor lives on a different grid")
    inv = 1.0 / sigma.sigma.values
    A, B = _scaled_operator(g, inv.ravel()[g.interior_index])
    q_t = p.q.values * inv
    system = SemilinearSystem(g, A, B, q_t.ravel()[g.interior_index], p.m)
    u, _ = solve_system(system, f, tol=tol)
    source = GridFunction(g, sigma.sigma.values * (-q_t * u.values**p.m))
    lam_t = normal_derivative(u, source)
    lam = nonlinear_dn(p, f, tol=tol)
    return (lam_t - lam).sup_norm()


def product_rows(grid: Grid, m: int, n_products: int, seed: int) -> np.ndarray:
    """Quadrature-weighted products of ``m`` random discrete harmonic functions.

    Row ``r`` uses its own generator seeded by ``(seed, r)``, so the first
    rows do not depend on ``n_products``.
    """
    op = laplace_operator(grid)
    w = grid.weights.ravel()[grid.interior_index]
    rows = np.empty((n_products, grid.n_interior))
    for r in range(n_products):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
        prod = w.copy()
        for f in rng.standard_normal((m, grid.n_boundary)):
            prod *= op.solve_dirichlet(f)[grid.interior_index]
        rows[r] = prod
    return rows


def completeness_smin(grid: Grid, m: int, n_products: int, seed: int = 0):
    """``(smallest singular value, rank deficit)`` of the product matrix.

    Rank deficit 0 means no nonzero interior function is orthogonal to every
    sampled product.  With fewer rows than interior nodes the smallest
    singular value is reported as 0.
    """
    M = product_rows(grid, m, n_products, seed)
    s = np.linalg.svd(M, compute_uv=False)
    n = grid.n_interior
    if s.size == 0 or s[0] == 0:
        return 0.0, n
    rank = int(np.sum(s > s[0] * max(M.shape) * np.finfo(float).eps))
    smin = float(s[-1]) if n_products >= n else 0.0
    return smin, n - rank


def gram_min_eigenvalue(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(M.T @ M)[0])
