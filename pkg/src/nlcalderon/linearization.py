"""Higher-order linearizations of the nonlinear DN map at zero data.

Two routes: a central mixed finite difference of the nonlinear DN map in the
parameters of ``eps_1 f_1 + ... + eps_k f_k``, and a direct solve of the
linearized equation ``Lap w = -m! q v_1 ... v_m`` with ``w = 0`` on the
boundary.  The direct route is the reference; the finite difference exercises
the full nonlinear map end to end.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import StepTooSmall
from .grid import BoundaryFunction, GridFunction, normal_derivative
from .harmonic import laplace_operator, solve_laplace_dirichlet
from .semilinear import DEFAULT_TOL, SemilinearProblem, nonlinear_dn

DEFAULT_EPS = 1e-3
MIN_STEP_POWER = 1e-9


@dataclass(frozen=True, eq=False)
class LinearizationRequest:
    problem: SemilinearProblem
    data: tuple
    eps: float = DEFAULT_EPS
    radius: float | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(self.data))
        if len(self.data) < 1:
            raise ValueError("need at least one boundary datum")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        for f in self.data:
            if np.iscomplexobj(f.values):
                raise ValueError("finite differencing needs real boundary data")
        if self.radius is not None:
            size = self.order * self.eps * max(f.sup_norm() for f in self.data)
            if size > self.radius:
                raise ValueError(
                    f"k * eps * max|f| = {size:.3g} exceeds the working radius {self.radius:.3g}"
                )

    @property
    def order(self) -> int:
        return len(self.data)


def mixed_fd_dn(req: LinearizationRequest, executor=None) -> BoundaryFunction:
    """Central ``2^k`` stencil for ``d_eps1 ... d_epsk Lambda_q`` at zero.

    The stencil sum always runs in the same order; ``executor`` (anything
    with an ordered ``map``) only changes where the solves happen.
    """
    k, eps = req.order, req.eps
    if eps**k < MIN_STEP_POWER:
        raise StepTooSmall(f"eps^k = {eps**k:.3g} is below the solver noise guard")
    p = req.problem
    signs = list(itertools.product((-1.0, 1.0), repeat=k))

    def evaluate(s):
        f = sum((si * eps) * fi.values for si, fi in zip(s, req.data))
        return nonlinear_dn(p, BoundaryFunction(p.grid, f), tol=req.tol).values

    results = list((executor.map if executor is not None else map)(evaluate, signs))
    total = np.zeros(p.grid.n_boundary)
    for s, val in zip(signs, results):
        total += math.prod(s) * val
    return BoundaryFunction(p.grid, total / (2 * eps) ** k)


def mth_linearization_direct(p: SemilinearProblem, data) -> BoundaryFunction:
    """``(D^m Lambda_q)_0(f_1, ..., f_m)`` from two linear solves per input."""
    data = list(data)
    if len(data) != p.m:
        raise ValueError(f"need exactly m = {p.m} boundary data, got {len(data)}")
    g = p.grid
    prod = np.ones(g.shape)
    for f in data:
        prod = prod * solve_laplace_dirichlet(g, f).values
    source = GridFunction(g, -math.factorial(p.m) * p.q.values * prod)
    w = laplace_operator(g).solve_dirichlet(np.zeros(g.n_boundary), source=source.interior)
    return normal_derivative(GridFunction(g, w), source)


def verify_vanishing_orders(p: SemilinearProblem, data, eps=DEFAULT_EPS,
                            tol=DEFAULT_TOL) -> list:
    """Sup norms of the FD linearizations of orders ``2 .. m-1`` (all zero in theory)."""
    data = list(data)
    if p.m >= 3 and len(data) < p.m - 1:
        raise ValueError(f"need at least m - 1 = {p.m - 1} boundary data")
    return [
        mixed_fd_dn(LinearizationRequest(p, data[:j], eps, tol=tol)).sup_norm()
        for j in range(2, p.m)
    ]


def autotune_eps(p: SemilinearProblem, data, candidates=None, tol=DEFAULT_TOL):
    """Pick the step with the smallest estimated total error.

    The error at ``eps_i`` is estimated by the change to the next (smaller)
    candidate, which is dominated by truncation for large steps and by
    solver noise amplified by ``(2 eps)^-k`` for small ones.  Returns
    ``(eps, {eps: estimate})``.
    """
    k = len(data)
    if candidates is None:
        candidates = [0.016 / 2**i for i in range(8)]
    candidates = sorted(
        (e for e in candidates if e**k >= MIN_STEP_POWER), reverse=True
    )
    if len(candidates) < 2:
        raise StepTooSmall("fewer than two admissible step candidates")
    vals = [mixed_fd_dn(LinearizationRequest(p, data, e, tol=tol)).values for e in candidates]
    est = {
        e: float(np.max(np.abs(vals[i] - vals[i + 1])))
        for i, e in enumerate(candidates[:-1])
    }
    best = min(est, key=est.get)
    return best, est
