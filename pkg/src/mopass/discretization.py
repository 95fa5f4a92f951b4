"""Uniform grids on intervals and rectangles with a zero Dirichlet boundary.

Unknowns live on nodes.  Gradients are piecewise constant on cells and are
produced by sparse difference matrices, so the discrete energy and its exact
gradient share one linear map.

Two 2D cell schemes are available:

``"p1"`` (default)
    every rectangle is split along its anti-diagonal into two triangles and
    the gradient of the linear interpolant is taken on each;
``"q1c"``
    forward differences of the bilinear interpolant evaluated at the
    rectangle centre.  It cannot see the checkerboard mode, so its energy
    decouples the even and odd sublattices; kept for comparison only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .reports import InputError

__all__ = ["Grid", "Field", "GradField", "grad", "quad_cells", "quad_nodes",
           "random_dirichlet_field", "stiffness_matrix", "neg_laplacian"]

SCHEMES = ("p1", "q1c")


def _diff_1d(n: int, h: float) -> sp.csr_matrix:
    """(n-1) x n forward difference."""
    return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr") / h


def _avg_1d(n: int) -> sp.csr_matrix:
    return sp.diags([np.full(n - 1, 0.5), np.full(n - 1, 0.5)], [0, 1], shape=(n - 1, n), format="csr")


def _select_1d(n: int, offset: int) -> sp.csr_matrix:
    """(n-1) x n picking node ``j + offset`` for cell ``j``."""
    return sp.eye(n - 1, n, k=offset, format="csr")


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on ``[0, L_1] x ... x [0, L_dim]`` (dim 1 or 2).

    Node values are stored with shape :attr:`shape` (``'ij'`` indexing);
    flattened node ``(i, j)`` has index ``i * n_y + j``.
    """

    extent: tuple
    n: tuple
    scheme: str = "p1"

    def __post_init__(self):
        ext = tuple(float(e) for e in np.atleast_1d(self.extent))
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        if len(n) == 1 and len(ext) > 1:
            n = n * len(ext)
        if len(ext) not in (1, 2) or len(n) != len(ext):
            raise InputError(f"extent {ext} and node counts {n} must both have length 1 or 2")
        if any(e <= 0 for e in ext) or any(k < 3 for k in n):
            raise InputError("extent must be positive and every axis needs at least 3 nodes")
        if self.scheme not in SCHEMES:
            raise InputError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "n", n)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple:
        return tuple(L / (k - 1) for L, k in zip(self.extent, self.n))

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    @cached_property
    def axes(self) -> tuple:
        return tuple(np.linspace(0.0, L, k) for L, k in zip(self.extent, self.n))

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates: shape ``(n,)`` in 1D, ``(n_x, n_y, 2)`` in 2D."""
        if self.dim == 1:
            return self.axes[0]
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        if self.dim == 1:
            mask[[0, -1]] = True
        else:
            mask[[0, -1], :] = True
            mask[:, [0, -1]] = True
        return mask

    @cached_property
    def interior(self) -> np.ndarray:
        """Flat indices of interior nodes."""
        return np.flatnonzero(~self.boundary_mask.ravel())

    @cached_property
    def node_weights(self) -> np.ndarray:
        """Trapezoid weights, shape :attr:`shape`."""
        ws = []
        for h, k in zip(self.h, self.n):
            w = np.full(k, h)
            w[[0, -1]] = 0.5 * h
            ws.append(w)
        return ws[0] if self.dim == 1 else np.outer(ws[0], ws[1])

    @cached_property
    def _cells(self):
        """(points, weights, [D_x, D_y]) for the cell scheme."""
        if self.dim == 1:
            (n,), (h,) = self.n, self.h
            pts = 0.5 * (self.axes[0][1:] + self.axes[0][:-1])
            return pts, np.full(n - 1, h), [_diff_1d(n, h)]
        (nx, ny), (hx, hy) = self.n, self.h
        xc = 0.5 * (self.axes[0][1:] + self.axes[0][:-1])
        yc = 0.5 * (self.axes[1][1:] + self.axes[1][:-1])
        if self.scheme == "q1c":
            Dx = sp.kron(_diff_1d(nx, hx), _avg_1d(ny), format="csr")
            Dy = sp.kron(_avg_1d(nx), _diff_1d(ny, hy), format="csr")
            X, Y = np.meshgrid(xc, yc, indexing="ij")
            pts = np.stack([X, Y], axis=-1).reshape(-1, 2)
            return pts, np.full(len(pts), hx * hy), [Dx, Dy]
        # lower triangle (i,j),(i+1,j),(i,j+1); upper triangle (i+1,j+1),(i,j+1),(i+1,j)
        S0x, S1x = _select_1d(nx, 0), _select_1d(nx, 1)
        S0y, S1y = _select_1d(ny, 0), _select_1d(ny, 1)
        Dx_lo = (sp.kron(S1x, S0y) - sp.kron(S0x, S0y)) / hx
        Dy_lo = (sp.kron(S0x, S1y) - sp.kron(S0x, S0y)) / hy
        Dx_up = (sp.kron(S1x, S1y) - sp.kron(S0x, S1y)) / hx
        Dy_up = (sp.kron(S1x, S1y) - sp.kron(S1x, S0y)) / hy
        Dx = sp.vstack([Dx_lo, Dx_up], format="csr")
        Dy = sp.vstack([Dy_lo, Dy_up], format="csr")
        X, Y = np.meshgrid(self.axes[0][:-1], self.axes[1][:-1], indexing="ij")
        lo = np.stack([X + hx / 3, Y + hy / 3], axis=-1).reshape(-1, 2)
        up = np.stack([X + 2 * hx / 3, Y + 2 * hy / 3], axis=-1).reshape(-1, 2)
        pts = np.concatenate([lo, up])
        return pts, np.full(len(pts), 0.5 * hx * hy), [Dx, Dy]

    @property
    def cell_points(self) -> np.ndarray:
        """Quadrature point of each cell: shape ``(n_cells,)`` in 1D, ``(n_cells, 2)`` in 2D."""
        return self._cells[0]

    @property
    def cell_weights(self) -> np.ndarray:
        return self._cells[1]

    @property
    def grad_matrices(self) -> list:
        return self._cells[2]

    @property
    def n_cells(self) -> int:
        return len(self.cell_weights)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """``sum_i D_i^T diag(w) D_i``: the discrete Dirichlet form on all nodes."""
        W = sp.diags(self.cell_weights)
        return sum(D.T @ W @ D for D in self.grad_matrices).tocsr()

    @cached_property
    def interior_stiffness_lu(self):
        K = self.stiffness[self.interior][:, self.interior].tocsc()
        return splu(K)

    def check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            if values.size == self.size:
                return values.reshape(self.shape)
            raise InputError(f"field of shape {values.shape} does not match grid shape {self.shape}")
        return values

    def zeros(self) -> "Field":
        return Field(np.zeros(self.shape), self)


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values on a grid."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        object.__setattr__(self, "values", self.grid.check(self.values))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def is_dirichlet(self) -> bool:
        return bool(np.all(self.values[self.grid.boundary_mask] == 0.0))

    def __add__(self, other):
        return Field(self.values + _vals(other, self.grid), self.grid)

    def __sub__(self, other):
        return Field(self.values - _vals(other, self.grid), self.grid)

    def __mul__(self, c):
        return Field(self.values * float(c), self.grid)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Field(self.values / float(c), self.grid)

    def __neg__(self):
        return Field(-self.values, self.grid)

    def to_csv(self, path) -> None:
        """Columns: node index per axis, coordinates, value (17 significant digits)."""
        g = self.grid
        idx = np.indices(g.shape).reshape(g.dim, -1).T
        xyz = g.coords.reshape(g.size, g.dim) if g.dim > 1 else g.coords[:, None]
        names = ["i", "j"][: g.dim] + ["x", "y"][: g.dim] + ["value"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for k in range(g.size):
                w.writerow([*map(int, idx[k]), *("%.17g" % c for c in xyz[k]), "%.17g" % self.flat[k]])

    @classmethod
    def from_csv(cls, path, grid: Grid) -> "Field":
        data = np.genfromtxt(path, delimiter=",", names=True)
        return cls(np.asarray(data["value"], dtype=float), grid)


def _vals(obj, grid):
    if isinstance(obj, Field):
        if obj.grid != grid:
            raise InputError("fields live on different grids")
        return obj.values
    return obj


@dataclass(frozen=True, eq=False)
class GradField:
    """Per-cell gradient vectors, shape ``(n_cells, dim)``."""

    values: np.ndarray
    grid: Grid

    @property
    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values ** 2, axis=-1))


def grad_matrix_apply(grid: Grid, flat: np.ndarray) -> np.ndarray:
    """Gradient for flat nodal vectors with optional leading batch axes."""
    flat = np.asarray(flat, dtype=float)
    lead = flat.shape[:-1]
    F = flat.reshape(-1, grid.size).T
    comps = [(D @ F).T.reshape(*lead, -1) for D in grid.grad_matrices]
    return np.stack(comps, axis=-1)


def grad(u: Field) -> GradField:
    """Cell gradient of the nodal field (exact for affine fields)."""
    return GradField(grad_matrix_apply(u.grid, u.flat), u.grid)


def quad_cells(w, grid: Grid) -> float:
    """Cell rule (midpoint in 1D, centroid on triangles); exact for constants."""
    w = np.asarray(w, dtype=float)
    if w.shape[-1:] != (grid.n_cells,):
        raise InputError(f"expected {grid.n_cells} cell values, got shape {w.shape}")
    return w @ grid.cell_weights


def quad_nodes(w, grid: Grid) -> float:
    """Trapezoid rule over nodes; exact for (multi)linear integrands."""
    w = grid.check(w)
    return float(np.sum(w * grid.node_weights))


def random_dirichlet_field(grid: Grid, seed: int, amplitude: float = 1.0,
                           modes: int | None = None) -> Field:
    """Reproducible random field, zero on the boundary, ``max|u| <= amplitude``.

    With ``modes=None`` node values are i.i.d. uniform on the interior; with an
    integer, a random sine series with that many modes per axis is used and
    rescaled so the sup is a random fraction of ``amplitude``.
    """
    rng = np.random.default_rng(seed)
    if amplitude == 0:
        return grid.zeros()
    if modes is None:
        v = rng.uniform(-amplitude, amplitude, size=grid.shape)
        v[grid.boundary_mask] = 0.0
        return Field(v, grid)
    ks = np.arange(1, modes + 1)
    basis = [np.sin(np.pi * np.outer(ks, ax / L)) for ax, L in zip(grid.axes, grid.extent)]
    if grid.dim == 1:
        c = rng.normal(size=modes) / ks
        v = c @ basis[0]
    else:
        c = rng.normal(size=(modes, modes)) / np.add.outer(ks, ks)
        v = basis[0].T @ c @ basis[1]
    v[grid.boundary_mask] = 0.0
    peak = np.max(np.abs(v))
    v *= amplitude * rng.uniform(0.2, 1.0) / peak if peak > 0 else 0.0
    return Field(v, grid)


def stiffness_matrix(grid: Grid) -> sp.csr_matrix:
    return grid.stiffness


def neg_laplacian(v: Field) -> Field:
    """Discrete ``-Delta v`` at nodes: stiffness action divided by nodal weights, zero on the boundary."""
    g = v.grid
    out = np.zeros(g.size)
    Kv = g.stiffness @ v.flat
    out[g.interior] = Kv[g.interior] / g.node_weights.ravel()[g.interior]
    return Field(out, g)
