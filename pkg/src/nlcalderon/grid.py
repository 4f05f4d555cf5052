"""Uniform rectangular grids, trapezoid quadrature and a Green-compatible flux.

Nodes are numbered row-major: node ``(i, j)`` (``i`` along x, ``j`` along y)
has flat index ``j * nx + i``.  Interior and boundary nodes keep that order.

The boundary flux is the weak-form residual of the 5-point stencil at the
boundary nodes.  Grid edges lying on the perimeter carry weight 1/2 in the
discrete Dirichlet form and boundary nodes carry the trapezoid mass of their
half (or quarter) cell, so that for every pair of grid functions

    boundary_integral(normal_derivative(u, s) * v)
        == interior_integral(laplacian(u, s) * v) + dirichlet_form(u, v)

holds to rounding error, where ``s`` is the value assigned to the Laplacian
of ``u`` at boundary nodes (the right-hand side of the equation there).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import GridError, NonSquareCells, TooSmall

EDGE_NAMES = ("bottom", "right", "top", "left")
_OUTWARD = {
    "bottom": (0.0, -1.0),
    "right": (1.0, 0.0),
    "top": (0.0, 1.0),
    "left": (-1.0, 0.0),
}


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Square-cell grid on ``[x0, x0+lx] x [y0, y0+ly]``."""

    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    lx: float = 1.0
    ly: float = 1.0

    @property
    def h(self) -> float:
        return self.lx / (self.nx - 1)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_boundary(self) -> int:
        return 2 * (self.nx + self.ny) - 4

    @property
    def n_interior(self) -> int:
        return (self.nx - 2) * (self.ny - 2)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.lx, self.ly))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x0 + 0.5 * self.lx, self.y0 + 0.5 * self.ly])

    @cached_property
    def x(self) -> np.ndarray:
        return _readonly(self.x0 + self.h * np.arange(self.nx))

    @cached_property
    def y(self) -> np.ndarray:
        return _readonly(self.y0 + self.h * np.arange(self.ny))

    @cached_property
    def coords(self):
        """Meshgrid ``(X, Y)``, each of shape ``(ny, nx)``."""
        X, Y = np.meshgrid(self.x, self.y)
        return _readonly(X), _readonly(Y)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return _readonly(mask)

    @cached_property
    def boundary_index(self) -> np.ndarray:
        """Flat node indices of boundary nodes (row-major order)."""
        return _readonly(np.flatnonzero(self.boundary_mask.ravel()))

    @cached_property
    def interior_index(self) -> np.ndarray:
        return _readonly(np.flatnonzero(~self.boundary_mask.ravel()))

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights: h^2 inside, h^2/2 on edges, h^2/4 at corners."""
        wx = np.ones(self.nx)
        wx[[0, -1]] = 0.5
        wy = np.ones(self.ny)
        wy[[0, -1]] = 0.5
        return _readonly(self.h**2 * np.outer(wy, wx))

    @cached_property
    def edges(self) -> tuple:
        """Edge memberships of each boundary node; corners belong to two."""
        out = []
        for k in self.boundary_index:
            j, i = divmod(int(k), self.nx)
            names = []
            if j == 0:
                names.append("bottom")
            if i == self.nx - 1:
                names.append("right")
            if j == self.ny - 1:
                names.append("top")
            if i == 0:
                names.append("left")
            out.append(tuple(names))
        return tuple(out)

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        # h/2 per incident perimeter segment: corners get h/2 from each edge
        return _readonly(np.full(self.n_boundary, self.h))

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward normals; a corner stores the mean of its two edge normals."""
        n = np.array(
            [np.mean([_OUTWARD[e] for e in names], axis=0) for names in self.edges]
        )
        return _readonly(n)

    @cached_property
    def arclength(self) -> np.ndarray:
        """Counter-clockwise perimeter position, starting at ``(x0, y0)``."""
        X, Y = self.coords
        bx = X.ravel()[self.boundary_index] - self.x0
        by = Y.ravel()[self.boundary_index] - self.y0
        lx, ly = self.lx, self.ly
        s = np.empty(self.n_boundary)
        for n, names in enumerate(self.edges):
            # a corner is placed on the edge along which it is reached first
            e = {("right", "top"): "right", ("top", "left"): "top"}.get(names, names[0])
            if e == "bottom":
                s[n] = bx[n]
            elif e == "right":
                s[n] = lx + by[n]
            elif e == "top":
                s[n] = lx + ly + (lx - bx[n])
            else:
                s[n] = 2 * lx + ly + (ly - by[n])
        return _readonly(s)

    @cached_property
    def stencil(self) -> sp.csr_matrix:
        """Unscaled 5-point stencil rows for interior nodes, over all nodes.

        ``(stencil @ u.ravel())[k] == h^2 * (Laplacian u)`` at interior node ``k``.
        """
        nx = self.nx
        rows, cols, vals = [], [], []
        for r, k in enumerate(self.interior_index):
            rows += [r] * 5
            cols += [k, k - 1, k + 1, k - nx, k + nx]
            vals += [-4.0, 1.0, 1.0, 1.0, 1.0]
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(self.n_interior, self.n_nodes)
        )

    @cached_property
    def flux_stencil(self) -> sp.csr_matrix:
        """Dirichlet-form residual rows at boundary nodes, over all nodes.

        Row ``b`` is ``sum_j c_bj (u_b - u_j)`` with ``c = 1/2`` for grid edges
        lying on the perimeter and ``c = 1`` otherwise.
        """
        nx, ny = self.nx, self.ny
        bmask = self.boundary_mask.ravel()
        rows, cols, vals = [], [], []
        for r, k in enumerate(self.boundary_index):
            j, i = divmod(int(k), nx)
            diag = 0.0
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if not (0 <= ii < nx and 0 <= jj < ny):
                    continue
                kk = jj * nx + ii
                on_perimeter = bmask[kk] and (
                    (dj == 0 and j in (0, ny - 1)) or (di == 0 and i in (0, nx - 1))
                )
                c = 0.5 if on_perimeter else 1.0
                rows.append(r)
                cols.append(kk)
                vals.append(-c)
                diag += c
            rows.append(r)
            cols.append(int(k))
            vals.append(diag)
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(self.n_boundary, self.n_nodes)
        )

    @cached_property
    def boundary_mass(self) -> np.ndarray:
        return _readonly(self.weights.ravel()[self.boundary_index])

    def boundary_coords(self):
        X, Y = self.coords
        return X.ravel()[self.boundary_index], Y.ravel()[self.boundary_index]


def build_grid(nx: int, ny: int, rect=(0.0, 0.0, 1.0, 1.0)) -> Grid:
    """Build a grid with ``nx * ny`` nodes on ``rect = (x0, y0, lx, ly)``."""
    if int(nx) != nx or int(ny) != ny:
        raise GridError("node counts must be integers")
    nx, ny = int(nx), int(ny)
    if nx < 3 or ny < 3:
        raise TooSmall(f"need at least 3 nodes per axis, got {nx}x{ny}")
    x0, y0, lx, ly = (float(v) for v in rect)
    if not (lx > 0 and ly > 0) or not np.all(np.isfinite([x0, y0, lx, ly])):
        raise GridError(f"invalid rectangle {rect}")
    hx, hy = lx / (nx - 1), ly / (ny - 1)
    if abs(hx - hy) > 1e-12 * max(hx, hy):
        raise NonSquareCells(f"spacings differ: hx={hx!r}, hy={hy!r}")
    return Grid(nx, ny, x0, y0, lx, ly)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real or complex values on every node, stored with shape ``(ny, nx)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.size != self.grid.n_nodes:
            raise GridError(f"expected {self.grid.n_nodes} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise GridError("grid function has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> GridFunction:
        X, Y = grid.coords
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))

    @classmethod
    def constant(cls, grid: Grid, c=1.0) -> GridFunction:
        return cls(grid, np.full(grid.shape, c))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def interior(self) -> np.ndarray:
        return self.flat[self.grid.interior_index]

    def trace(self) -> BoundaryFunction:
        return BoundaryFunction(self.grid, self.flat[self.grid.boundary_index])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def real(self) -> GridFunction:
        return GridFunction(self.grid, self.values.real)

    @property
    def imag(self) -> GridFunction:
        return GridFunction(self.grid, self.values.imag)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __pow__(self, p):
        return GridFunction(self.grid, self.values**p)

    def to_csv(self, path) -> None:
        X, Y = self.grid.coords
        v = self.flat.astype(complex)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "re", "im"])
            for x, y, z in zip(X.ravel(), Y.ravel(), v):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(z.real)), repr(float(z.imag))])

    @classmethod
    def from_csv(cls, path, grid: Grid | None = None) -> GridFunction:
        """Read a ``x,y,re,im`` file; the grid is inferred when not given."""
        data = _read_csv(path, ["x", "y", "re", "im"])
        x = np.array([float(r["x"]) for r in data])
        y = np.array([float(r["y"]) for r in data])
        z = np.array([float(r["re"]) for r in data]) + 1j * np.array(
            [float(r["im"]) for r in data]
        )
        if grid is None:
            xs, ys = np.unique(x), np.unique(y)
            grid = build_grid(
                len(xs), len(ys), (xs[0], ys[0], xs[-1] - xs[0], ys[-1] - ys[0])
            )
        X, Y = grid.coords
        tol = 1e-9 * max(grid.lx, grid.ly)
        if len(z) != grid.n_nodes or not (
            np.allclose(x, X.ravel(), atol=tol) and np.allclose(y, Y.ravel(), atol=tol)
        ):
            raise GridError(f"{path}: rows do not match the grid node order")
        if np.all(z.imag == 0):
            z = z.real
        return cls(grid, z)


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Values on boundary nodes, in the grid's boundary order."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        v = v.ravel()
        if v.size != self.grid.n_boundary:
            raise GridError(f"expected {self.grid.n_boundary} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise GridError("boundary function has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> BoundaryFunction:
        bx, by = grid.boundary_coords()
        return cls(grid, np.broadcast_to(fn(bx, by), bx.shape))

    @classmethod
    def constant(cls, grid: Grid, c=1.0) -> BoundaryFunction:
        return cls(grid, np.full(grid.n_boundary, c))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def real(self) -> BoundaryFunction:
        return BoundaryFunction(self.grid, self.values.real)

    @property
    def imag(self) -> BoundaryFunction:
        return BoundaryFunction(self.grid, self.values.imag)

    def _other(self, other):
        if isinstance(other, BoundaryFunction):
            if other.grid != self.grid:
                raise GridError("boundary functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return BoundaryFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return BoundaryFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return BoundaryFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return BoundaryFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return BoundaryFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return BoundaryFunction(self.grid, -self.values)

    def to_csv(self, path) -> None:
        g = self.grid
        bx, by = g.boundary_coords()
        v = self.values.astype(complex)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["edge", "arclength", "x", "y", "re", "im"])
            for names, s, x, y, z in zip(g.edges, g.arclength, bx, by, v):
                w.writerow(
                    ["+".join(names), repr(float(s)), repr(float(x)), repr(float(y)),
                     repr(float(z.real)), repr(float(z.imag))]
                )

    @classmethod
    def from_csv(cls, path, grid: Grid) -> BoundaryFunction:
        data = _read_csv(path, ["edge", "arclength", "x", "y", "re", "im"])
        z = np.array([float(r["re"]) + 1j * float(r["im"]) for r in data])
        bx, by = grid.boundary_coords()
        x = np.array([float(r["x"]) for r in data])
        y = np.array([float(r["y"]) for r in data])
        tol = 1e-9 * max(grid.lx, grid.ly)
        if len(z) != grid.n_boundary or not (
            np.allclose(x, bx, atol=tol) and np.allclose(y, by, atol=tol)
        ):
            raise GridError(f"{path}: rows do not match the boundary node order")
        if np.all(z.imag == 0):
            z = z.real
        return cls(grid, z)


def _read_csv(path, header):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != header:
            raise GridError(f"{path}: expected header {','.join(header)}")
        return list(reader)


def interior_integral(u: GridFunction):
    """Composite trapezoid rule over the rectangle."""
    s = np.sum(u.grid.weights * u.values)
    return complex(s) if np.iscomplexobj(s) else float(s)


def boundary_integral(g: BoundaryFunction):
    """Trapezoid rule along the perimeter (corner weight h/2 + h/2)."""
    s = np.sum(g.grid.boundary_weights * g.values)
    return complex(s) if np.iscomplexobj(s) else float(s)


def _boundary_source(grid: Grid, source):
    if source is None:
        return 0.0
    if isinstance(source, GridFunction):
        return source.flat[grid.boundary_index]
    if isinstance(source, BoundaryFunction):
        return source.values
    return np.broadcast_to(np.asarray(source), (grid.n_boundary,))


def normal_derivative(u: GridFunction, source=None) -> BoundaryFunction:
    """Outward flux of ``u`` consistent with the 5-point stencil.

    ``source`` is the value of the Laplacian of ``u`` at boundary nodes
    (a GridFunction, BoundaryFunction or scalar); it defaults to zero, which
    is right for discretely harmonic ``u``.  For a solution of
    ``Lap u = s`` pass ``s``: the flux then equals what ghost-node
    elimination of the stencil at the boundary gives.
    """
    g = u.grid
    residual = g.flux_stencil @ u.flat + g.boundary_mass * _boundary_source(g, source)
    return BoundaryFunction(g, residual / g.boundary_weights)


def laplacian(u: GridFunction, boundary_values=None) -> GridFunction:
    """5-point Laplacian at interior nodes; ``boundary_values`` elsewhere."""
    g = u.grid
    out = np.zeros(g.n_nodes, dtype=u.values.dtype)
    out[g.interior_index] = (g.stencil @ u.flat) / g.h**2
    out[g.boundary_index] = _boundary_source(g, boundary_values)
    return GridFunction(g, out)


def dirichlet_form(u: GridFunction, v: GridFunction):
    """Bilinear edge sum approximating the integral of grad u . grad v.

    Perimeter edges get weight 1/2 (trapezoid in the normal direction).
    No complex conjugation is applied.
    """
    a, b = u.values, v.values
    dxa, dxb = np.diff(a, axis=1), np.diff(b, axis=1)
    dya, dyb = np.diff(a, axis=0), np.diff(b, axis=0)
    wx = np.ones(dxa.shape)
    wx[[0, -1], :] = 0.5
    wy = np.ones(dya.shape)
    wy[:, [0, -1]] = 0.5
    s = np.sum(wx * dxa * dxb) + np.sum(wy * dya * dyb)
    return complex(s) if np.iscomplexobj(s) else float(s)


def smooth_random_boundary(grid: Grid, rng: np.random.Generator, modes: int = 4) -> BoundaryFunction:
    """Random trigonometric polynomial in arclength, scaled to unit sup norm."""
    s = 2 * np.pi * grid.arclength / (2 * (grid.lx + grid.ly))
    vals = np.zeros(grid.n_boundary)
    for j in range(modes + 1):
        a, b = rng.standard_normal(2) / (1 + j)
        vals += a * np.cos(j * s) + b * np.sin(j * s)
    return BoundaryFunction(grid, vals / np.max(np.abs(vals)))
