"""Mountain-pass critical points by path deformation, plus a 1D shooting oracle.

The solver keeps a polyline from ``0`` to ``u1`` through function space.
Each iteration locates the maximum of ``J_h`` along the polyline (a vertex,
or an interior point of a segment found by root-finding on the directional
derivative, which is then inserted as a vertex), and pushes that point
downhill with an Armijo line search.  A step is accepted only if the two
segments touching the moved vertex also stay below the old maximum, so the
recorded maximum of ``J_h`` over the whole polyline never increases.

Energy differences that fall below the resolution of a direct evaluation
are obtained by integrating the exact gradient along the step (Gauss-
Legendre), so the line search keeps working down to tight tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .discretization import Field, Grid, random_dirichlet_field
from .problem import DiscreteEnergy, Nonlinearity
from .reports import InputError

__all__ = ["MountainPassConfig", "MountainPassResult", "Geometry", "GeometryError", "OracleError",
           "bump_field", "probe_geometry", "solve", "shooting_oracle"]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W
# direct energy differences below this fraction of the energy scale are
# recomputed by integrating the gradient along the step
_DIRECT_DIFF_FLOOR = 1e-8


class GeometryError(RuntimeError):
    """The mountain-pass geometry could not be exhibited; ``probe`` names the failed half."""

    def __init__(self, message: str, probe: str):
        super().__init__(message)
        self.probe = probe


class OracleError(RuntimeError):
    """The shooting method found no slope giving a positive solution."""


@dataclass(frozen=True)
class MountainPassConfig:
    path_points: int = 16
    tol: float = 1e-8
    max_iter: int = 2000
    bump_center: tuple | None = None
    bump_radius: float | None = None
    bump_amplitude: float = 1.0
    t_scan_max: float = 1e6
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    armijo_max_backtracks: int = 40
    refine_threshold: float = 1e-12
    metric: str = "h1"
    n_directions: int = 100
    direction_modes: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.path_points < 8:
            raise ValueError("path_points must be at least 8")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.armijo_c1 < 0.5 or not 0 < self.armijo_shrink < 1:
            raise ValueError("Armijo parameters need c1 in (0, 1/2) and shrink in (0, 1)")
        if self.metric not in ("h1", "flux", "euclidean"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.n_directions < 1:
            raise ValueError("n_directions must be positive")


@dataclass
class Geometry:
    eta: float
    r: float
    u1: Field
    t_neg: float
    rim_positive: int = 0
    rim_total: int = 0
    u1_energy: float = float("nan")
    u1_norm: float = float("nan")

    def to_dict(self) -> dict:
        return {"eta": self.eta, "r": self.r, "t_neg": self.t_neg,
                "rim_positive": self.rim_positive, "rim_total": self.rim_total,
                "u1_energy": self.u1_energy, "u1_norm": self.u1_norm}


@dataclass
class MountainPassResult:
    u_star: Field
    beta: float
    residual: float
    iterations: int
    history: list
    geometry: Geometry | None
    status: str
    grad_norm: float = float("nan")
    path: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def summary(self) -> dict:
        g = self.geometry
        return {"status": self.status, "beta": self.beta, "residual": self.residual,
                "eta": g.eta if g else None, "r": g.r if g else None,
                "t_neg": g.t_neg if g else None, "iterations": self.iterations,
                "grad_norm": self.grad_norm}


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def bump_field(grid: Grid, center=None, radius=None, amplitude: float = 1.0) -> Field:
    """``amplitude (1 - (d/r)^2)^2`` inside the ball of radius ``r``, zero outside."""
    c = np.asarray(center if center is not None else [0.5 * L for L in grid.extent], dtype=float)
    r = radius if radius is not None else 0.5 * min(grid.extent)
    X = grid.coords if grid.dim > 1 else grid.coords[:, None]
    d2 = np.sum((X - c.reshape((1,) * grid.dim + (grid.dim,))) ** 2, axis=-1) / r ** 2
    v = np.where(d2 < 1.0, amplitude * (1.0 - d2) ** 2, 0.0)
    v[grid.boundary_mask] = 0.0
    return Field(v, grid)


def _unit_directions(de: DiscreteEnergy, grid: Grid, config: MountainPassConfig) -> np.ndarray:
    bump = bump_field(grid, config.bump_center, config.bump_radius, 1.0)
    dirs = [bump.flat]
    for k in range(config.n_directions - 1):
        dirs.append(random_dirichlet_field(grid, config.seed * 1_000_003 + k, 1.0,
                                           modes=config.direction_modes).flat)
    V = np.array(dirs)
    norms = np.array([de.grad_norm(v) for v in V])
    return V / norms[:, None]


def probe_geometry(fam, nl: Nonlinearity, grid: Grid, config: MountainPassConfig | None = None,
                   max_halvings: int = 50) -> Geometry:
    """Exhibit the mountain-pass geometry numerically.

    (i) For ``eta = 0.9, 0.45, ...`` evaluate ``J`` on ``n_directions`` fields
    with ``||grad v||_G = eta`` (the bump and smooth random fields) and stop
    at the first ``eta`` where all are positive; ``r`` is their minimum.
    (ii) Scale the bump by ``t = 1, 2, 4, ...`` until ``J(t phi) < 0`` and
    ``||grad(t phi)||_G > eta``; ``u1 = t phi``.
    """
    config = config or MountainPassConfig()
    de = DiscreteEnergy(fam, nl, grid)
    V = _unit_directions(de, grid, config)
    eta = r = None
    for k in range(max_halvings):
        e = 0.9 * 0.5 ** k
        J = de.energy(e * V)
        if np.all(J > 0):
            eta, r = e, float(np.min(J))
            break
    if eta is None:
        raise GeometryError(f"no eta down to {0.9 * 0.5 ** (max_halvings - 1):.3g} with J > 0 on "
                            f"all {len(V)} rim directions", "MP1")
    phi = bump_field(grid, config.bump_center, config.bump_radius, config.bump_amplitude)
    t = 1.0
    while t <= config.t_scan_max:
        u = phi.flat * t
        Ju = float(de.energy(u))
        if Ju < 0:
            nrm = de.grad_norm(u)
            if nrm > eta:
                return Geometry(eta, r, Field(u.copy(), grid), t, len(V), len(V), Ju, nrm)
        t *= 2.0
    raise GeometryError(f"J(t phi) stays nonnegative for t up to {config.t_scan_max:g}", "MP2")


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

class _Vertex:
    __slots__ = ("u", "J", "g")

    def __init__(self, u, J, g):
        self.u, self.J, self.g = u, J, g


class _Segment:
    """Maximum of ``J`` on ``[a, b]``: value, parameter and (if interior) the vertex there."""

    __slots__ = ("value", "tau", "peak")

    def __init__(self, value, tau, peak=None):
        self.value, self.tau, self.peak = value, tau, peak


class _PathSolver:
    def __init__(self, fam, nl, grid, config: MountainPassConfig):
        self.de = DiscreteEnergy(fam, nl, grid)
        self.grid = grid
        self.cfg = config
        self.interior = grid.interior
        self.n_grad = 0
        if config.metric == "h1":
            self._lu = grid.interior_stiffness_lu

    # -- evaluation ---------------------------------------------------------
    def gradient(self, u):
        self.n_grad += 1
        return self.de.gradient(u)

    def vertex(self, u, J=None):
        g = self.gradient(u)
        return _Vertex(u, float(self.de.energy(u)) if J is None else J, g)

    def delta_energy(self, a: _Vertex, b_u: np.ndarray) -> float:
        """``J(b) - J(a)``, robust to cancellation for small steps."""
        gp_a, fp_a = self.de.parts(a.u)
        gp_b, fp_b = self.de.parts(b_u)
        direct = (gp_b - gp_a) - (fp_b - fp_a)
        scale = abs(gp_a) + abs(fp_a) + abs(gp_b) + abs(fp_b)
        if abs(direct) > _DIRECT_DIFF_FLOOR * scale:
            return float(direct)
        step = b_u - a.u
        return float(sum(w * (self.gradient(a.u + x * step) @ step) for x, w in zip(_GL_X, _GL_W)))

    def direction(self, g, u=None):
        if self.cfg.metric == "euclidean":
            return g
        lu = self._flux_lu(u) if self.cfg.metric == "flux" else self._lu
        d = np.zeros_like(g)
        d[self.interior] = lu.solve(g[self.interior])
        return d

    def _flux_lu(self, u):
        """Factorized stiffness weighted by ``g(|grad u|)/|grad u|``, the linearized flux at ``u``."""
        de = self.de
        r = de.grad_magnitude(u)
        r = np.maximum(r, max(1e-3 * float(np.max(r)), 1e-12))
        c = de.cell_weights * de.fam.density(de.cell_points, r) / r
        K = sum(D.T @ sp.diags(c) @ D for D in de.D).tocsr()
        return splu(K[self.interior][:, self.interior].tocsc())

    def residual(self, u) -> float:
        return self.de.dual_residual(u)

    # -- segments -----------------------------------------------------------
    def segment(self, a: _Vertex, b: _Vertex) -> _Segment:
        d = b.u - a.u
        d0, d1 = a.g @ d, b.g @ d
        if d0 > 0 and d1 < 0:
            cache = {}

            def slope(tau):
                u = a.u + tau * d
                g = self.gradient(u)
                cache[tau] = g
                return g @ d

            tau = brentq(slope, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16, maxiter=200)
            u = a.u + tau * d
            g = cache.get(tau)
            if g is None:
                g = self.gradient(u)
            J = a.J + self.delta_energy(a, u)
            if 0.0 < tau < 1.0 and J >= max(a.J, b.J):
                return _Segment(J, tau, _Vertex(u, J, g))
        return _Segment(a.J, 0.0) if a.J >= b.J else _Segment(b.J, 1.0)

    # -- main loop ----------------------------------------------------------
    def run(self, path: list, geometry: Geometry | None) -> MountainPassResult:
        cfg = self.cfg
        verts = [self.vertex(u) for u in path]
        segs = [self.segment(verts[i], verts[i + 1]) for i in range(len(verts) - 1)]
        cap = 8 * cfg.path_points
        history = []
        s_prev = 1.0
        last_refine = 0
        status = "max_iter"
        it = 0
        residual = math.inf
        k = 0
        while True:
            k, verts, segs = self._peak(verts, segs)
            J_max = verts[k].J
            residual = self.residual(verts[k].u)
            history.append({"iter": it, "k_star": k, "J_max": J_max,
                            "residual": residual, "path_len": len(verts)})
            if residual <= cfg.tol:
                status = "converged"
                break
            if it >= cfg.max_iter:
                break
            it += 1
            moved = self._descend(verts, segs, k, s_prev)
            if moved is None:
                if len(verts) >= cap or not self._refine(verts, segs, k):
                    status = "stalled"
                    break
                last_refine = it
                continue
            s_prev = moved
            if (it - last_refine >= 10 and len(history) > 10
                    and history[-11]["J_max"] - J_max < cfg.refine_threshold * max(1.0, abs(J_max))):
                if self._refine(verts, segs, k):
                    last_refine = it
            while len(verts) > cap:
                if not self._prune(verts, segs):
                    break
        k, verts, segs = self._peak(verts, segs)
        u = verts[k].u
        u_star = Field(u.copy(), self.grid)
        beta = float(self.de.energy(u))
        gnorm = self.de.grad_norm(u)
        if geometry is not None and status == "converged" and not gnorm > 0.5 * geometry.eta:
            status = "collapsed"
        return MountainPassResult(u_star, beta, residual, it, history, geometry, status, gnorm,
                                  [Field(v.u.copy(), self.grid) for v in verts])

    def _peak(self, verts, segs):
        """Index of the polyline maximum as a vertex (inserting it if interior)."""
        i = max(range(len(segs)), key=lambda j: (segs[j].value, -j))
        s = segs[i]
        if s.peak is not None:
            verts.insert(i + 1, s.peak)
            segs[i:i + 1] = [_Segment(s.peak.J, 1.0), _Segment(s.peak.J, 0.0)]
            return i + 1, verts, segs
        return (i if s.tau == 0.0 else i + 1), verts, segs

    def _descend(self, verts, segs, k, s_prev):
        cfg = self.cfg
        z = verts[k]
        d = self.direction(z.g, z.u)
        slope = float(z.g @ d)
        if not slope > 0:
            return None
        s = min(1.0, s_prev / cfg.armijo_shrink)
        for _ in range(cfg.armijo_max_backtracks + 1):
            w_u = z.u - s * d
            target = z.J - cfg.armijo_c1 * s * slope
            dJ = self.delta_energy(z, w_u)
            if z.J + dJ <= target:
                w = _Vertex(w_u, z.J + dJ, self.gradient(w_u))
                left = self.segment(verts[k - 1], w)
                right = self.segment(w, verts[k + 1])
                if (left.value <= max(target, verts[k - 1].J)
                        and right.value <= max(target, verts[k + 1].J)):
                    verts[k] = w
                    segs[k - 1], segs[k] = left, right
                    return s
            s *= cfg.armijo_shrink
        return None

    def _refine(self, verts, segs, k) -> bool:
        """Insert midpoints of the segments next to vertex ``k`` (the path is unchanged)."""
        added = False
        for i in (k, k - 1):
            if 0 <= i < len(verts) - 1:
                a, b = verts[i], verts[i + 1]
                mid_u = 0.5 * (a.u + b.u)
                mid = _Vertex(mid_u, a.J + self.delta_energy(a, mid_u), self.gradient(mid_u))
                verts.insert(i + 1, mid)
                segs[i:i + 1] = [self.segment(a, mid), self.segment(mid, b)]
                added = True
        return added

    def _prune(self, verts, segs) -> bool:
        """Drop the most nearly collinear vertex whose removal keeps the maximum."""
        k = max(range(len(verts)), key=lambda j: verts[j].J)
        J_max = max(s.value for s in segs)
        scores = []
        for i in range(1, len(verts) - 1):
            if i == k:
                continue
            a, b, c = verts[i - 1].u, verts[i].u, verts[i + 1].u
            chord = np.linalg.norm(c - a)
            scores.append((np.linalg.norm(b - 0.5 * (a + c)) / max(chord, 1e-300), i))
        for _, i in sorted(scores)[:8]:
            seg = self.segment(verts[i - 1], verts[i + 1])
            if seg.value <= J_max:
                del verts[i]
                segs[i - 1:i + 1] = [seg]
                return True
        return False


def solve(fam, nl: Nonlinearity, grid: Grid, config: MountainPassConfig | None = None,
          geometry: Geometry | None = None, initial_path: Sequence | None = None) -> MountainPassResult:
    """Deform a path from ``0`` to ``u1`` until its maximum is a critical point.

    The geometry is probed first unless given.  ``initial_path`` (fields or
    flat arrays, first one zero) replaces the straight path ``(k/m) u1``,
    which allows a restart from a previous solution.  Non-convergence is
    reported through ``status`` (``"max_iter"``, ``"stalled"``,
    ``"collapsed"``), never raised.
    """
    config = config or MountainPassConfig()
    if geometry is None:
        geometry = probe_geometry(fam, nl, grid, config)
    if initial_path is None:
        m = config.path_points
        u1 = geometry.u1.flat
        path = [(k / m) * u1 for k in range(m + 1)]
    else:
        path = [np.asarray(p.flat if isinstance(p, Field) else p, dtype=float).ravel().copy()
                for p in initial_path]
        if len(path) < 3:
            raise InputError("initial_path needs at least three points")
        for p in path:
            if p.shape != (grid.size,):
                raise InputError("initial_path point does not match the grid")
            p[grid.boundary_mask.ravel()] = 0.0
    return _PathSolver(fam, nl, grid, config).run(path, geometry)


# ---------------------------------------------------------------------------
# shooting oracle
# ---------------------------------------------------------------------------

def _rk4_batch(s, p, q, k_flux, coeff, length, n_steps):
    """Integrate from ``u = 0, u' = s`` for a batch of slopes; returns (positive-on-(0, L], u(L))."""
    H = length / n_steps
    u = np.zeros_like(s)
    with np.errstate(over="ignore"):
        w = k_flux * s ** (p - 1.0)
    alive = np.ones(s.shape, dtype=bool)
    inv = 1.0 / (p - 1.0)

    def rhs(u, w):
        du = np.sign(w) * (np.abs(w) / k_flux) ** inv
        dw = -coeff * np.sign(u) * np.abs(u) ** (q - 1.0)
        return du, dw

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            a1, b1 = rhs(u, w)
            a2, b2 = rhs(u + 0.5 * H * a1, w + 0.5 * H * b1)
            a3, b3 = rhs(u + 0.5 * H * a2, w + 0.5 * H * b2)
            a4, b4 = rhs(u + H * a3, w + H * b3)
            u = u + H / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
            w = w + H / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
            alive &= u > 0
    return alive, u


def _rk4_scalar(s, p, q, k_flux, coeff, H, n_steps, stride=None):
    """Pure-float RK4 for one slope; optionally records every ``stride`` steps."""
    inv = 1.0 / (p - 1.0)
    u, w = 0.0, k_flux * s ** (p - 1.0)
    out = [0.0] if stride else None
    copysign = math.copysign

    def rhs(u, w):
        return copysign((abs(w) / k_flux) ** inv, w), -coeff * copysign(abs(u) ** (q - 1.0), u)

    for i in range(1, n_steps + 1):
        a1, b1 = rhs(u, w)
        a2, b2 = rhs(u + 0.5 * H * a1, w + 0.5 * H * b1)
        a3, b3 = rhs(u + 0.5 * H * a2, w + 0.5 * H * b2)
        a4, b4 = rhs(u + H * a3, w + H * b3)
        u += H / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        w += H / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        if stride and i % stride == 0:
            out.append(u)
    return (u, out) if stride else u


def shooting_oracle(p: float, q: float, grid: Grid, coeff: float = 1.0, flux_coeff: float = 1.0,
                    substeps: int = 16, log10_range=(-8.0, 300.0)) -> Field:
    """Positive solution of ``-(k |u'|^{p-2} u')' = c |u|^{q-2} u`` on ``(0, L)``, ``u(0) = u(L) = 0``.

    Integrates the first-order system for ``(u, k |u'|^{p-2} u')`` with
    classical RK4 at step ``h / substeps``.  The slope ``s = u'(0)`` is
    bracketed by a log-spaced scan of the predicate "u stays positive on
    (0, L]", narrowed by batched bisection, and finished with Brent's method
    on ``u(L; s)``.
    """
    if grid.dim != 1:
        raise InputError("the shooting oracle needs a 1D grid")
    if p < 2:
        raise InputError("the shooting oracle needs p >= 2")
    (L,), (n,) = grid.extent, grid.n
    n_steps = (n - 1) * substeps
    H = L / n_steps
    args = (p, q, flux_coeff, coeff, L, n_steps)

    s = np.logspace(log10_range[0], log10_range[1], int(log10_range[1] - log10_range[0]) + 1)
    alive, _ = _rk4_batch(s, *args)
    flips = np.flatnonzero(alive[:-1] & ~alive[1:])
    if not alive[0] or len(flips) == 0:
        raise OracleError(f"no slope in [1e{log10_range[0]:g}, 1e{log10_range[1]:g}] separates "
                          "positive solutions from sign changes")
    lo, hi = s[flips[0]], s[flips[0] + 1]
    for _ in range(20):
        if hi / lo < 1.0 + 1e-6:
            break
        trial = np.geomspace(lo, hi, 66)[1:-1]
        alive, _ = _rk4_batch(trial, *args)
        dead = np.flatnonzero(~alive)
        j = dead[0] if len(dead) else len(trial)
        lo = trial[j - 1] if j > 0 else lo
        hi = trial[j] if j < len(trial) else hi

    def end_value(slope):
        return _rk4_scalar(slope, p, q, flux_coeff, coeff, H, n_steps)

    f_lo, f_hi = end_value(lo), end_value(hi)
    if not (f_lo > 0 > f_hi):
        raise OracleError(f"bracket [{lo:.6g}, {hi:.6g}] does not change sign of u(L)")
    s_star = brentq(end_value, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    _, vals = _rk4_scalar(s_star, p, q, flux_coeff, coeff, H, n_steps, stride=substeps)
    u = np.array(vals)
    u[[0, -1]] = 0.0
    return Field(u, grid)
