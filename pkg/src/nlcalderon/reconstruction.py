"""Fourier samples of the potential from second linearizations, and inversion.

For ``m = 2`` and the harmonic exponential pair ``v1, v2`` with ``v1 v2 =
exp(2i xi . x)``, minus one half of the boundary integral of
``(D^2 Lambda_q)_0(v1|, v2|)`` equals ``integral of q exp(2i xi . x)``, the
Fourier transform of ``q`` at ``kappa = -2 xi`` (convention
``q_hat(kappa) = integral q(x) exp(-i kappa . x) dx``).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import BoundaryFunction, Grid, GridFunction, boundary_integral, interior_integral
from .harmonic import make_calderon_pair
from .linearization import (
    DEFAULT_EPS,
    LinearizationRequest,
    mixed_fd_dn,
    mth_linearization_direct,
)
from .semilinear import DEFAULT_TOL, SemilinearProblem

METHODS = ("dn_direct", "dn_fd", "quadrature_oracle")


@dataclass(frozen=True)
class FreqLattice:
    """Frequencies ``xi = -kappa / 2`` with ``kappa`` on the dual lattice of the box.

    ``step = 2 pi / L_box`` is the spacing of ``kappa`` (so ``xi`` is spaced
    by ``step / 2``); ``radius`` bounds ``|xi|``.
    """

    L_box: float
    radius: float

    def __post_init__(self):
        if not (self.L_box > 0 and self.radius >= 0):
            raise ValueError("need L_box > 0 and radius >= 0")

    @property
    def step(self) -> float:
        return 2 * math.pi / self.L_box

    @property
    def kappas(self) -> np.ndarray:
        nmax = int(math.floor(2 * self.radius / self.step + 1e-9))
        out = []
        for a in range(-nmax, nmax + 1):
            for b in range(-nmax, nmax + 1):
                kap = self.step * np.array([a, b], dtype=float)
                if 0.5 * math.hypot(*kap) <= self.radius * (1 + 1e-12):
                    out.append(kap)
        return np.array(out)

    @property
    def nodes(self) -> np.ndarray:
        return -0.5 * self.kappas

    def __len__(self):
        return len(self.kappas)


@dataclass(frozen=True)
class FourierSample:
    xi: tuple
    value: complex
    method: str

    @property
    def kappa(self) -> tuple:
        return (-2 * self.xi[0], -2 * self.xi[1])


def _complex_bilinear(D, f1: BoundaryFunction, f2: BoundaryFunction, normalize=False):
    """Evaluate a real bilinear map on complex data, part by part."""
    parts1 = [(f1.real, 1.0), (f1.imag, 1j)]
    parts2 = [(f2.real, 1.0), (f2.imag, 1j)]
    g = f1.grid
    total = np.zeros(g.n_boundary, dtype=complex)
    for a, ca in parts1:
        for b, cb in parts2:
            na, nb = a.sup_norm(), b.sup_norm()
            if na == 0 or nb == 0:
                continue
            if normalize:
                total += ca * cb * na * nb * D(a / na, b / nb).values
            else:
                total += ca * cb * D(a, b).values
    return BoundaryFunction(g, total)


def second_linearization(p: SemilinearProblem, f1, f2, method="dn_direct",
                         eps=DEFAULT_EPS, tol=DEFAULT_TOL) -> BoundaryFunction:
    """``(D^2 Lambda_q)_0(f1, f2)`` for real or complex data."""
    if method == "dn_direct":
        return _complex_bilinear(lambda a, b: mth_linearization_direct(p, [a, b]), f1, f2)
    if method == "dn_fd":
        return _complex_bilinear(
            lambda a, b: mixed_fd_dn(LinearizationRequest(p, [a, b], eps, tol=tol)),
            f1, f2, normalize=True,
        )
    raise ValueError(f"unknown linearization method {method!r}")


def recover_fourier_sample(p: SemilinearProblem, xi, method="dn_direct",
                           eps=DEFAULT_EPS, tol=DEFAULT_TOL, ximax=None) -> FourierSample:
    """Estimate ``q_hat(-2 xi)`` from boundary data."""
    if p.m != 2:
        raise ValueError("Fourier recovery needs the quadratic nonlinearity (m = 2)")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    xi = np.asarray(xi, dtype=float).reshape(2)
    if method == "quadrature_oracle":
        pair = make_calderon_pair(p.grid, xi, "sampled", ximax)
        value = interior_integral(p.q * pair.v1 * pair.v2)
    else:
        pair = make_calderon_pair(p.grid, xi, "discrete", ximax)
        D = second_linearization(p, pair.f1, pair.f2, method, eps, tol)
        value = -0.5 * boundary_integral(D)
    return FourierSample((float(xi[0]), float(xi[1])), complex(value), method)


@dataclass
class ReconstructionResult:
    q_rec: GridFunction
    samples: list
    radius: float
    L_box: float
    imag_residue: float
    q_true: GridFunction | None = None
    l2_rel_error: float | None = None
    sup_error: float | None = None
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "l2_rel_error": self.l2_rel_error,
            "sup_error": self.sup_error,
            "imag_residue": self.imag_residue,
            "radius": self.radius,
            "L_box": self.L_box,
        }

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_samples_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["xi_x", "xi_y", "re", "im", "method"])
        for s in samples:
            w.writerow([repr(s.xi[0]), repr(s.xi[1]), repr(s.value.real),
                        repr(s.value.imag), s.method])


def read_samples_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["xi_x", "xi_y", "re", "im", "method"]:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            FourierSample((float(r["xi_x"]), float(r["xi_y"])),
                          complex(float(r["re"]), float(r["im"])), r["method"])
            for r in reader
        ]


def _is_canonical(kappa) -> bool:
    # one representative of each {kappa, -kappa}
    return kappa[0] > 0 or (kappa[0] == 0 and kappa[1] >= 0)


def fourier_series(grid: Grid, samples, L_box: float) -> np.ndarray:
    """``sum q_hat(kappa) exp(i kappa . x) / L_box^2`` on the grid nodes."""
    X, Y = grid.coords
    out = np.zeros(grid.shape, dtype=complex)
    for s in samples:
        kx, ky = s.kappa
        out += s.value * np.exp(1j * (kx * X + ky * Y))
    return out / L_box**2


def l2_norm(u: GridFunction) -> float:
    return math.sqrt(abs(interior_integral(GridFunction(u.grid, np.abs(u.values) ** 2))))


def reconstruct_potential(p: SemilinearProblem, lattice: FreqLattice, method="dn_direct",
                          q_true: GridFunction | None = None, eps=DEFAULT_EPS,
                          tol=DEFAULT_TOL, executor=None) -> ReconstructionResult:
    """Sample ``q_hat`` on the lattice and sum the Fourier series on the grid.

    Only one of each ``+-xi`` pair is computed; its partner is the complex
    conjugate (the potential is real).  ``executor`` may run the samples in
    parallel; results are assembled in lattice order either way.
    """
    g = p.grid
    if lattice.L_box < max(g.lx, g.ly) * (1 - 1e-12):
        raise ValueError("L_box must be at least the domain side")
    kappas = lattice.kappas
    todo = [kap for kap in kappas if _is_canonical(kap)]

    def sample(kap):
        return recover_fourier_sample(p, -0.5 * kap, method, eps, tol)

    computed = list((executor.map if executor is not None else map)(sample, todo))
    by_kappa = {tuple(k): s for k, s in zip(map(tuple, todo), computed)}
    samples = []
    for kap in kappas:
        key = tuple(kap)
        if key in by_kappa:
            samples.append(by_kappa[key])
        else:
            s = by_kappa[tuple(-kap)]
            samples.append(FourierSample((-s.xi[0], -s.xi[1]), s.value.conjugate(), method))
    series = fourier_series(g, samples, lattice.L_box)
    q_rec = GridFunction(g, series.real)
    res = ReconstructionResult(
        q_rec=q_rec,
        samples=samples,
        radius=lattice.radius,
        L_box=lattice.L_box,
        imag_residue=float(np.max(np.abs(series.imag), initial=0.0)),
    )
    if q_true is None:
        q_true = p.q
    res.q_true = q_true
    diff = q_rec - q_true
    ref = l2_norm(q_true)
    res.l2_rel_error = l2_norm(diff) / ref if ref > 0 else l2_norm(diff)
    res.sup_error = diff.sup_norm()
    return res


def probe_functions(grid: Grid) -> list:
    """Four harmonic traces with unit sup norm: 1, X, Y, X^2 - Y^2 (centred, scaled)."""
    cx, cy = grid.center
    sx, sy = grid.lx / 2, grid.ly / 2
    fns = [
        lambda x, y: np.ones_like(x),
        lambda x, y: (x - cx) / sx,
        lambda x, y: (y - cy) / sy,
        lambda x, y: ((x - cx) / sx) ** 2 - ((y - cy) / sy) ** 2,
    ]
    out = []
    for fn in fns:
        f = BoundaryFunction.from_function(grid, fn)
        out.append(f / f.sup_norm())
    return out


def probe_pairs(grid: Grid) -> list:
    """The fixed 16-pair probe set (all ordered pairs of ``probe_functions``)."""
    fs = probe_functions(grid)
    return [(a, b) for a in fs for b in fs]


@dataclass(frozen=True)
class StabilityRow:
    dn_distance: float
    l2_distance: float
    fourier_distance: float | None = None


def dn_distance(q1: GridFunction, q2: GridFunction, pairs=None) -> float:
    """Probe-set surrogate for the operator norm of ``D^2(Lambda_q1 - Lambda_q2)_0``."""
    p1, p2 = SemilinearProblem(q1, 2), SemilinearProblem(q2, 2)
    pairs = probe_pairs(q1.grid) if pairs is None else pairs
    best = 0.0
    for a, b in pairs:
        d = mth_linearization_direct(p1, [a, b]) - mth_linearization_direct(p2, [a, b])
        best = max(best, d.sup_norm())
    return best


def stability_probe(grid: Grid, q_base: GridFunction, perturbations, lattice=None,
                    pairs=None) -> list:
    """Table of ``(dn_distance, l2_distance[, fourier_distance])`` per perturbation.

    ``fourier_distance`` (only with a lattice) is the largest difference of
    direct Fourier samples over the lattice.
    """
    if q_base.grid != grid:
        raise ValueError("q_base lives on a different grid")
    pairs = probe_pairs(grid) if pairs is None else pairs
    rows = []
    for pert in perturbations:
        q2 = q_base + pert
        fd = None
        if lattice is not None:
            p1, p2 = SemilinearProblem(q_base, 2), SemilinearProblem(q2, 2)
            fd = max(
                abs(recover_fourier_sample(p1, xi).value - recover_fourier_sample(p2, xi).value)
                for xi in lattice.nodes
            )
        rows.append(StabilityRow(dn_distance(q_base, q2, pairs), l2_norm(q2 - q_base), fd))
    return rows
