"""Discrete Laplace solves, the Laplace DN map and harmonic exponentials."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse.linalg as spla

from .errors import FrequencyTooLarge, SolverFailure
from .grid import BoundaryFunction, Grid, GridFunction, normal_derivative

# exp(|xi| * diam) above this is treated as numerically meaningless
OVERFLOW_GUARD = 1e12


class LaplaceOperator:
    """5-point Laplacian on interior unknowns with a reusable LU factorization.

    ``matrix`` is ``Lap_h`` restricted to interior columns (negative definite);
    ``coupling`` maps boundary values to their contribution to interior rows.
    Solves against the shared factorization are serialized by a lock.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        K = grid.stencil / grid.h**2
        self.matrix = K[:, grid.interior_index].tocsc()
        self.coupling = K[:, grid.boundary_index].tocsr()
        self._lock = threading.Lock()
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:  # pragma: no cover - SPD matrix
            raise SolverFailure(f"factorization failed: {exc}") from exc

    def _solve_real(self, rhs: np.ndarray) -> np.ndarray:
        with self._lock:
            x = self._lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolverFailure("Laplace solve produced non-finite values")
        r = self.matrix @ x - rhs
        scale = 8.0 / self.grid.h**2 * np.max(np.abs(x), initial=0.0) + np.max(
            np.abs(rhs), initial=0.0
        )
        if np.max(np.abs(r), initial=0.0) > 1e-12 * max(scale, np.finfo(float).tiny):
            raise SolverFailure("Laplace solve residual above 1e-12 relative")
        return x

    def solve_interior(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``matrix @ x = rhs``; complex right-hand sides part by part."""
        rhs = np.asarray(rhs)
        if np.iscomplexobj(rhs):
            return self._solve_real(np.ascontiguousarray(rhs.real)) + 1j * self._solve_real(
                np.ascontiguousarray(rhs.imag)
            )
        return self._solve_real(rhs.astype(float))

    def solve_dirichlet(self, f, source=None) -> np.ndarray:
        """Flat solution of ``Lap_h u = source`` inside with ``u = f`` on the boundary."""
        g = self.grid
        f = np.asarray(f)
        rhs = -(self.coupling @ f)
        if source is not None:
            rhs = rhs + source
        u = np.zeros(g.n_nodes, dtype=np.result_type(rhs, f))
        u[g.boundary_index] = f
        u[g.interior_index] = self.solve_interior(rhs)
        return u


@lru_cache(maxsize=32)
def laplace_operator(grid: Grid) -> LaplaceOperator:
    return LaplaceOperator(grid)


def solve_laplace_dirichlet(grid: Grid, f: BoundaryFunction) -> GridFunction:
    """Discretely harmonic extension of ``f``."""
    return GridFunction(grid, laplace_operator(grid).solve_dirichlet(f.values))


def linear_dn(grid: Grid, f: BoundaryFunction) -> BoundaryFunction:
    """DN map of the discrete Laplace equation (first linearization)."""
    return normal_derivative(solve_laplace_dirichlet(grid, f))


@dataclass(frozen=True, eq=False)
class CalderonPair:
    """Harmonic exponentials ``exp((+-k + i xi) . x)`` with ``k`` = xi rotated by +90 deg.

    The real growth is measured from the rectangle centre, which rescales
    ``v1`` and ``v2`` by reciprocal constants and leaves ``v1 * v2`` unchanged.
    """

    xi: np.ndarray
    k: np.ndarray
    v1: GridFunction
    v2: GridFunction
    mode: str

    @property
    def f1(self) -> BoundaryFunction:
        return self.v1.trace()

    @property
    def f2(self) -> BoundaryFunction:
        return self.v2.trace()


def rotate90(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return np.array([-xi[1], xi[0]])


def sampled_exponentials(grid: Grid, xi):
    xi = np.asarray(xi, dtype=float)
    k = rotate90(xi)
    X, Y = grid.coords
    c = grid.center
    phase = 1j * (xi[0] * X + xi[1] * Y)
    growth = k[0] * (X - c[0]) + k[1] * (Y - c[1])
    return k, GridFunction(grid, np.exp(growth + phase)), GridFunction(
        grid, np.exp(-growth + phase)
    )


def make_calderon_pair(grid: Grid, xi, mode: str = "discrete", ximax=None) -> CalderonPair:
    xi = np.asarray(xi, dtype=float).reshape(2)
    if not np.all(np.isfinite(xi)):
        raise FrequencyTooLarge("frequency must be finite")
    r = float(np.hypot(*xi))
    if ximax is not None and r > ximax:
        raise FrequencyTooLarge(f"|xi| = {r:.4g} exceeds ximax = {ximax:.4g}")
    if r * grid.diameter > np.log(OVERFLOW_GUARD):
        raise FrequencyTooLarge(
            f"exp(|xi| * diam) = exp({r * grid.diameter:.2f}) exceeds {OVERFLOW_GUARD:g}"
        )
    k, v1, v2 = sampled_exponentials(grid, xi)
    if mode == "discrete":
        v1 = solve_laplace_dirichlet(grid, v1.trace())
        v2 = solve_laplace_dirichlet(grid, v2.trace())
    elif mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    return CalderonPair(xi.copy(), k, v1, v2, mode)


def is_discretely_harmonic(u: GridFunction, rtol=1e-10) -> bool:
    g = u.grid
    lap = g.stencil @ u.flat
    return bool(np.max(np.abs(lap), initial=0.0) <= rtol * 8 * max(u.sup_norm(), 1e-300))


__all__ = [
    "LaplaceOperator",
    "laplace_operator",
    "solve_laplace_dirichlet",
    "linear_dn",
    "CalderonPair",
    "make_calderon_pair",
    "sampled_exponentials",
    "rotate90",
    "is_discretely_harmonic",
]
