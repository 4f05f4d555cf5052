"""Forward solver for ``Lap u + q u^m = 0`` with small Dirichlet data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridError, JacobianSingular, NonConvergence, SolverFailure
from .grid import BoundaryFunction, Grid, GridFunction, normal_derivative
from .harmonic import laplace_operator

DEFAULT_TOL = 1e-12
MAX_ITER = 50
MAX_HALVINGS = 20
DELTA_CAP = 1e6
BISECTION_DEPTH = 40
CONTRACTION_LIMIT = 0.5

_EPS = np.finfo(float).eps


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_residual: float
    norm_ratio: float
    tolerance: float = DEFAULT_TOL
    residual_history: list = field(default_factory=list)
    uniqueness_gap: float | None = None

    def convergence_order(self) -> float | None:
        """Observed order from the last three residuals above the tolerance.

        ``log(r3/r2) / log(r2/r1)``; 2 for quadratic convergence.  None when
        fewer than three residuals lie above the tolerance.
        """
        r = [x for x in self.residual_history if x > self.tolerance]
        if len(r) < 3 or min(r[-3:]) <= 0:
            return None
        r1, r2, r3 = r[-3:]
        return math.log(r3 / r2) / math.log(r2 / r1)

    def to_dict(self) -> dict:
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "final_residual": float(self.final_residual),
            "norm_ratio": float(self.norm_ratio),
        }


class SemilinearSystem:
    """Interior residual ``F(u) = A u_I + B f + q u_I^m`` and its Newton solver.

    ``A`` acts on interior unknowns and ``B`` couples the boundary values in.
    Any operator of this shape can be plugged in (the gauge check assembles
    a row-scaled one).
    """

    def __init__(self, grid: Grid, A, B, q_int: np.ndarray, m: int):
        self.grid = grid
        self.A = sp.csc_matrix(A)
        self.B = sp.csr_matrix(B)
        self.q = np.asarray(q_int, dtype=float)
        self.m = int(m)
        self._absA = abs(self.A)
        self._absB = abs(self.B)

    @cached_property
    def _lu(self):
        return spla.splu(self.A)

    def harmonic_interior(self, f: np.ndarray) -> np.ndarray:
        return self._lu.solve(-(self.B @ f))

    def residual(self, u: np.ndarray, f: np.ndarray) -> np.ndarray:
        return self.A @ u + self.B @ f + self.q * u**self.m

    def noise_floor(self, u: np.ndarray, f: np.ndarray) -> float:
        """Rounding-error bound on the computed residual."""
        mag = self._absA @ np.abs(u) + self._absB @ np.abs(f) + np.abs(self.q * u**self.m)
        return 16 * _EPS * float(np.max(mag, initial=0.0))

    def jacobian(self, u: np.ndarray):
        d = self.m * self.q * u ** (self.m - 1)
        return (self.A + sp.diags(d)).tocsc()

    def newton(self, f, u0, tol=DEFAULT_TOL, max_iter=MAX_ITER):
        """Damped Newton; returns ``(u_interior, iterations, history, tolerance)``."""
        u = np.array(u0, dtype=float)
        F = self.residual(u, f)
        r = float(np.max(np.abs(F), initial=0.0))
        history = [r]
        eff_tol = max(tol, self.noise_floor(u, f))
        if r <= eff_tol:
            return u, 0, history, eff_tol
        for it in range(1, max_iter + 1):
            try:
                with np.errstate(all="raise"):
                    step = spla.spsolve(self.jacobian(u), -F)
            except (RuntimeError, FloatingPointError) as exc:
                raise JacobianSingular(f"Newton linear solve failed: {exc}") from exc
            if not np.all(np.isfinite(step)):
                raise JacobianSingular("Newton linear solve produced non-finite values")
            lam = 1.0
            for _ in range(MAX_HALVINGS + 1):
                trial = u + lam * step
                with np.errstate(over="ignore", invalid="ignore"):
                    F_trial = self.residual(trial, f)
                r_trial = float(np.max(np.abs(F_trial), initial=0.0))
                if np.isfinite(r_trial) and r_trial < r:
                    break
                lam *= 0.5
            else:
                # no decrease: fine only if we are already at rounding level
                if r <= max(tol, self.noise_floor(u, f)):
                    return u, it - 1, history, max(tol, self.noise_floor(u, f))
                raise NonConvergence(it, r)
            u, F, r = trial, F_trial, r_trial
            history.append(r)
            eff_tol = max(tol, self.noise_floor(u, f))
            if r <= eff_tol:
                return u, it, history, eff_tol
        raise NonConvergence(max_iter, r)


@dataclass(frozen=True, eq=False)
class SemilinearProblem:
    """``Lap u + q u^m = 0`` on the grid of ``q``."""

    q: GridFunction
    m: int = 2

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"exponent m must be an integer >= 2, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if np.iscomplexobj(self.q.values) and np.any(self.q.values.imag != 0):
            raise GridError("potential must be real")
        if np.iscomplexobj(self.q.values):
            object.__setattr__(self, "q", self.q.real)

    @property
    def grid(self) -> Grid:
        return self.q.grid

    @cached_property
    def system(self) -> SemilinearSystem:
        op = laplace_operator(self.grid)
        return SemilinearSystem(self.grid, op.matrix, op.coupling, self.q.interior, self.m)

    def source(self, u: GridFunction) -> GridFunction:
        """Value of the Laplacian of a solution: ``-q u^m``."""
        return -(self.q * u**self.m)

    def scaled(self, lam: float) -> SemilinearProblem:
        return SemilinearProblem(self.q * lam, self.m)


def _assemble(grid, f, u_int):
    u = np.zeros(grid.n_nodes)
    u[grid.boundary_index] = f
    u[grid.interior_index] = u_int
    return GridFunction(grid, u)


def solve_system(system: SemilinearSystem, f: BoundaryFunction, tol=DEFAULT_TOL,
                 max_iter=MAX_ITER, initial=None, check_uniqueness=False):
    g = system.grid
    fv = np.asarray(f.values, dtype=float)
    if np.iscomplexobj(f.values):
        raise GridError("boundary data must be real")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not np.any(fv) and initial is None:
        u0 = np.zeros(g.n_interior)
    elif initial is None:
        u0 = system.harmonic_interior(fv)
    else:
        u0 = np.asarray(initial.interior if isinstance(initial, GridFunction) else initial,
                        dtype=float)
    u_int, its, hist, eff_tol = system.newton(fv, u0, tol, max_iter)
    u = _assemble(g, fv, u_int)
    fn = float(np.max(np.abs(fv), initial=0.0))
    report = SolveReport(
        converged=True,
        iterations=its,
        final_residual=hist[-1],
        norm_ratio=u.sup_norm() / fn if fn > 0 else 0.0,
        tolerance=eff_tol,
        residual_history=hist,
    )
    if check_uniqueness:
        u_alt, *_ = system.newton(fv, np.zeros(g.n_interior), tol, max_iter)
        gap = float(np.max(np.abs(u_alt - u_int), initial=0.0))
        report.uniqueness_gap = gap
        if gap > 10 * max(tol, eff_tol):
            raise SolverFailure(
                f"Newton from 0 reached a different solution (sup gap {gap:.3e})"
            )
    return u, report


def solve_semilinear(p: SemilinearProblem, f: BoundaryFunction, tol=DEFAULT_TOL,
                     max_iter=MAX_ITER, initial=None, check_uniqueness=False):
    """Small solution of ``Lap_h u + q u^m = 0``, ``u = f`` on the boundary.

    Damped Newton started from the harmonic extension of ``f`` (or from
    ``initial``).  Returns ``(u, SolveReport)``.  Raises ``NonConvergence``
    when the residual stops contracting, which means ``f`` is outside the
    small-data regime.
    """
    return solve_system(p.system, f, tol, max_iter, initial, check_uniqueness)


def picard_solve(p: SemilinearProblem, f: BoundaryFunction, tol=DEFAULT_TOL,
                 max_iter=500) -> GridFunction:
    """Fixed-point iteration ``Lap u_{k+1} = -q u_k^m``; independent of Newton."""
    g = p.grid
    op = laplace_operator(g)
    q = p.q.interior
    u = op.solve_dirichlet(f.values)
    for _ in range(max_iter):
        u_new = op.solve_dirichlet(f.values, source=-q * u[g.interior_index] ** p.m)
        change = float(np.max(np.abs(u_new - u)))
        u = u_new
        if change <= tol:
            return GridFunction(g, u)
    raise NonConvergence(max_iter, change, "Picard iteration did not converge")


def contraction_factor(p: SemilinearProblem, u: GridFunction) -> float:
    """Sup-norm size of ``Lap^-1 (m q u^{m-1})`` at ``u``.

    This is the Lipschitz constant of the fixed-point map
    ``w -> Lap^-1(-q w^m)`` at ``u``; values below 1/2 keep the Newton
    Jacobian within a factor 2 of the Laplacian.
    """
    g = p.grid
    d = np.abs(p.m * p.q.interior * u.interior ** (p.m - 1))
    if not np.any(d):
        return 0.0
    # -Lap_h^{-1} is entrywise nonnegative, so the operator norm is attained at |d|
    w = laplace_operator(g).solve_interior(-d)
    return float(np.max(np.abs(w)))


def _admissible(p: SemilinearProblem, a: float, tol: float) -> bool:
    f = BoundaryFunction.constant(p.grid, a)
    try:
        u, _ = solve_semilinear(p, f, tol=tol)
    except SolverFailure:
        return False
    return contraction_factor(p, u) <= CONTRACTION_LIMIT


def estimate_delta(p: SemilinearProblem, a_max=DELTA_CAP, depth=BISECTION_DEPTH,
                   tol=DEFAULT_TOL) -> float:
    """Working radius for the boundary data, by bisection on constant data.

    For each sign, finds the largest amplitude ``a`` for which Newton
    converges on ``f = +-a`` and the contraction factor stays below 1/2.
    The bisection runs on ``log a`` over ``[a_max * 1e-12, a_max]``.  Returns
    half of the smaller amplitude, or ``a_max`` when nothing ever fails.
    """
    radii = []
    for sign in (1.0, -1.0):
        if _admissible(p, sign * a_max, tol):
            radii.append(a_max)
            continue
        lo, hi = math.log(a_max * 1e-12), math.log(a_max)
        if not _admissible(p, sign * math.exp(lo), tol):
            radii.append(0.5 * math.exp(lo))
            continue
        for _ in range(depth):
            mid = 0.5 * (lo + hi)
            if _admissible(p, sign * math.exp(mid), tol):
                lo = mid
            else:
                hi = mid
        radii.append(0.5 * math.exp(lo))
    return min(radii)


def nonlinear_dn(p: SemilinearProblem, f: BoundaryFunction, tol=DEFAULT_TOL) -> BoundaryFunction:
    """``f -> d_nu u_f`` for the small solution ``u_f``."""
    u, _ = solve_semilinear(p, f, tol=tol)
    return normal_derivative(u, p.source(u))
