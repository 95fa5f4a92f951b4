"""The Dirichlet problem ``-div A(x, grad u) = f(x, u)``, ``u = 0`` on the boundary.

``A(x, xi) = g(x, |xi|) xi / |xi|`` is the flux of the Phi-function family.
The discrete energy

    J_h(u) = sum_cells w_c G(x_c, |D u|_c) - sum_nodes w_j F(x_j, u_j)

is assembled with the gradient matrices of the grid, and
:func:`energy_gradient` is its exact derivative with respect to the nodal
values.  The growth conditions on ``f`` are provided as sampled checkers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .discretization import Field, Grid, grad, grad_matrix_apply
from .orlicz_space import luxemburg_norm
from .phi_core import ConjugatePhi, SpatialFunction, split_coords
from .reports import CheckReport, InputError

__all__ = ["NonlinearityKind", "Nonlinearity", "EnergyReport", "DiscreteEnergy", "flux",
           "energy", "energy_gradient", "weak_residual", "dual_residual",
           "check_subcritical", "check_superlinear_zero", "check_ar", "check_ar_consequence"]

FLUX_EPS = 1e-12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


class NonlinearityKind(str, Enum):
    PURE_POWER = "pure_power"
    WEIGHTED_POWER = "weighted_power"
    TABLE = "table"
    CALLABLE = "callable"


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Right-hand side ``f(x, t)`` with antiderivative ``F(x, t) = int_0^t f``.

    ``theta`` and ``t0`` are the Ambrosetti-Rabinowitz exponent and threshold
    the problem is claimed to satisfy; the checkers test the claim.
    """

    kind: NonlinearityKind
    q: float | None = None
    coeff: float = 1.0
    weight: SpatialFunction | None = None
    theta: float | None = None
    t0: float = 1.0
    C_growth: float | None = None
    knots: np.ndarray | None = None
    knot_values: np.ndarray | None = None
    f_fn: Callable | None = None
    F_fn: Callable | None = None
    dim: int = 1
    _Fknots: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        k = self.kind
        if k in (NonlinearityKind.PURE_POWER, NonlinearityKind.WEIGHTED_POWER):
            if self.q is None or not self.q > 1:
                raise ValueError("power nonlinearities need q > 1")
            if k is NonlinearityKind.WEIGHTED_POWER and self.weight is None:
                raise ValueError("weighted_power needs a weight")
        elif k is NonlinearityKind.TABLE:
            t = np.asarray(self.knots, dtype=float)
            v = np.asarray(self.knot_values, dtype=float)
            if t.ndim != 1 or t.shape != v.shape or len(t) < 2 or np.any(np.diff(t) <= 0):
                raise ValueError("table knots must be strictly increasing and match the values")
            if not t[0] <= 0.0 <= t[-1]:
                raise ValueError("table knots must bracket t = 0")
            Fc = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))))
            F0 = _piecewise_quadratic(0.0, t, v, Fc)
            object.__setattr__(self, "knots", t)
            object.__setattr__(self, "knot_values", v)
            object.__setattr__(self, "_Fknots", Fc - F0)
        elif k is NonlinearityKind.CALLABLE:
            if self.f_fn is None:
                raise ValueError("callable nonlinearity needs f_fn")

    @classmethod
    def pure_power(cls, q, coeff=1.0, theta=None, t0=1.0, **kw) -> "Nonlinearity":
        """``f = coeff |t|^{q-2} t``."""
        return cls(NonlinearityKind.PURE_POWER, q=float(q), coeff=float(coeff), theta=theta, t0=t0, **kw)

    @classmethod
    def weighted_power(cls, q, weight, theta=None, t0=1.0, dim=1, **kw) -> "Nonlinearity":
        """``f = c(x) |t|^{q-2} t``."""
        return cls(NonlinearityKind.WEIGHTED_POWER, q=float(q), weight=SpatialFunction.coerce(weight),
                   theta=theta, t0=t0, dim=dim, **kw)

    @classmethod
    def table(cls, knots, values, theta=None, t0=1.0, **kw) -> "Nonlinearity":
        """x-independent ``f`` from knots, linear in between and beyond."""
        return cls(NonlinearityKind.TABLE, knots=knots, knot_values=values, theta=theta, t0=t0, **kw)

    @classmethod
    def from_callable(cls, f, F=None, theta=None, t0=1.0, dim=1, **kw) -> "Nonlinearity":
        """``f(x, t)`` vectorized; ``F`` is integrated by Gauss-Legendre if omitted."""
        return cls(NonlinearityKind.CALLABLE, f_fn=f, F_fn=F, theta=theta, t0=t0, dim=dim, **kw)

    def describe(self) -> dict:
        d = {"kind": self.kind.value, "theta": self.theta, "t0": self.t0}
        if self.q is not None:
            d["q"] = self.q
        if self.kind is NonlinearityKind.PURE_POWER:
            d["coeff"] = self.coeff
        if self.weight is not None:
            d["weight"] = self.weight.describe()
        return d

    @property
    def is_zero(self) -> bool:
        return self.kind is NonlinearityKind.PURE_POWER and self.coeff == 0.0

    def _weight(self, x):
        return self.weight(split_coords(x, self.dim))

    def f(self, x, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k is NonlinearityKind.PURE_POWER:
            return self.coeff * np.sign(t) * np.abs(t) ** (self.q - 1.0)
        if k is NonlinearityKind.WEIGHTED_POWER:
            return self._weight(x) * np.sign(t) * np.abs(t) ** (self.q - 1.0)
        if k is NonlinearityKind.TABLE:
            return _linear(t, self.knots, self.knot_values)
        return np.asarray(self.f_fn(x, t), dtype=float)

    def F(self, x, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k is NonlinearityKind.PURE_POWER:
            return self.coeff * np.abs(t) ** self.q / self.q
        if k is NonlinearityKind.WEIGHTED_POWER:
            return self._weight(x) * np.abs(t) ** self.q / self.q
        if k is NonlinearityKind.TABLE:
            return _piecewise_quadratic(t, self.knots, self.knot_values, self._Fknots)
        if self.F_fn is not None:
            return np.asarray(self.F_fn(x, t), dtype=float)
        s = 0.5 * (_GL_NODES + 1.0)
        x = np.asarray(x, dtype=float)
        xe = x[..., None] if self.dim == 1 else x[..., None, :]
        vals = self.f_fn(xe, t[..., None] * s)
        return 0.5 * t * np.sum(_GL_WEIGHTS * vals, axis=-1)


def _linear(t, knots, vals):
    out = np.interp(t, knots, vals)
    lo, hi = t < knots[0], t > knots[-1]
    s0 = (vals[1] - vals[0]) / (knots[1] - knots[0])
    s1 = (vals[-1] - vals[-2]) / (knots[-1] - knots[-2])
    out = np.where(lo, vals[0] + s0 * (t - knots[0]), out)
    return np.where(hi, vals[-1] + s1 * (t - knots[-1]), out)


def _piecewise_quadratic(t, knots, vals, Fc):
    """Exact antiderivative of the piecewise-linear interpolant (anchored by ``Fc``)."""
    t = np.asarray(t, dtype=float)
    k = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(knots) - 2)
    k = np.where(t > knots[-1], len(knots) - 1, k)
    return Fc[k] + 0.5 * (t - knots[k]) * (vals[k] + _linear(t, knots, vals))


def flux(fam, x, xi) -> np.ndarray:
    """``A(x, xi) = g(x, |xi|) xi / max(|xi|, 1e-12)`` for ``xi`` with trailing vector axis."""
    xi = np.asarray(xi, dtype=float)
    r = np.sqrt(np.sum(xi ** 2, axis=-1))
    coef = fam.density(x, r) / np.maximum(r, FLUX_EPS)
    return coef[..., None] * xi


@dataclass
class EnergyReport:
    J: float
    grad_norm: float
    parts: tuple

    def to_dict(self) -> dict:
        return {"J": self.J, "grad_norm": self.grad_norm,
                "parts": {"G": self.parts[0], "F": self.parts[1]}}


class DiscreteEnergy:
    """Energy ``J_h`` and its exact gradient on flat nodal vectors.

    Flat vectors may carry leading batch axes for the energy.  Boundary
    entries of gradients are zeroed, which is the projection onto the
    Dirichlet subspace.
    """

    def __init__(self, fam, nl: Nonlinearity, grid: Grid):
        if tuple(fam.extent) != tuple(grid.extent):
            raise InputError(f"family extent {fam.extent} differs from grid extent {grid.extent}")
        self.fam, self.nl, self.grid = fam, nl, grid
        self.cell_points = grid.cell_points
        self.cell_weights = grid.cell_weights
        self.node_points = grid.coords.reshape(grid.size, grid.dim) if grid.dim > 1 else grid.coords
        self.node_weights = grid.node_weights.ravel()
        self.D = grid.grad_matrices
        self.interior = grid.interior

    def grad_magnitude(self, flat):
        xi = grad_matrix_apply(self.grid, flat)
        return np.sqrt(np.sum(xi ** 2, axis=-1))

    def parts(self, flat):
        flat = np.asarray(flat, dtype=float)
        r = self.grad_magnitude(flat)
        g_part = np.sum(self.cell_weights * self.fam.value(self.cell_points, r), axis=-1)
        f_part = np.sum(self.node_weights * self.nl.F(self.node_points, flat), axis=-1)
        return g_part, f_part

    def energy(self, flat):
        g_part, f_part = self.parts(flat)
        return g_part - f_part

    def gradient(self, flat) -> np.ndarray:
        flat = np.asarray(flat, dtype=float)
        comps = [D @ flat for D in self.D]
        r = np.sqrt(sum(c ** 2 for c in comps))
        coef = self.cell_weights * self.fam.density(self.cell_points, r) / np.maximum(r, FLUX_EPS)
        out = sum(D.T @ (coef * c) for D, c in zip(self.D, comps))
        out = out - self.node_weights * self.nl.f(self.node_points, flat)
        res = np.zeros_like(out)
        res[self.interior] = out[self.interior]
        return res

    def nodal_residual(self, flat) -> np.ndarray:
        """Gradient divided by nodal weights: the strong-form residual at each node."""
        g = self.gradient(flat)
        out = np.zeros_like(g)
        out[self.interior] = g[self.interior] / self.node_weights[self.interior]
        return out

    def dual_residual(self, flat) -> float:
        """``2 ||r||_{G*}`` with ``r`` the nodal residual.

        By the discrete Hoelder inequality ``|<J'(u), v>| <= dual_residual *
        ||v||_G`` for every Dirichlet ``v``.
        """
        r = self.nodal_residual(flat)
        return 2.0 * float(luxemburg_norm(ConjugatePhi(self.fam), r, self.grid))

    def grad_norm(self, flat) -> float:
        return float(luxemburg_norm(self.fam, self.grad_magnitude(flat), self.grid, at="cells"))


def _as_field(u, grid=None) -> Field:
    if isinstance(u, Field):
        if not u.is_dirichlet():
            raise InputError("field does not vanish on the boundary")
        return u
    raise InputError("expected a Field")


def energy(fam, nl: Nonlinearity, u: Field) -> EnergyReport:
    """``J_h(u)`` with its two parts and the dual residual of ``J_h'(u)``."""
    u = _as_field(u)
    de = DiscreteEnergy(fam, nl, u.grid)
    gp, fp = de.parts(u.flat)
    return EnergyReport(float(gp - fp), de.dual_residual(u.flat), (float(gp), float(fp)))


def energy_gradient(fam, nl: Nonlinearity, u: Field) -> Field:
    """Exact derivative of ``J_h`` with respect to the nodal values (zero on the boundary)."""
    u = _as_field(u)
    return Field(DiscreteEnergy(fam, nl, u.grid).gradient(u.flat), u.grid)


def weak_residual(fam, nl: Nonlinearity, u: Field, v: Field) -> float:
    """``<J'(u), v> = int A(x, grad u) . grad v - int f(x, u) v`` on the grid."""
    u, v = _as_field(u), _as_field(v)
    g = u.grid
    gu, gv = grad(u).values, grad(v).values
    a = flux(fam, g.cell_points, gu)
    pts = g.coords.reshape(g.size, g.dim) if g.dim > 1 else g.coords
    return float(np.sum(g.cell_weights * np.sum(a * gv, axis=-1))
                 - np.sum(g.node_weights.ravel() * nl.f(pts, u.flat) * v.flat))


def dual_residual(fam, nl: Nonlinearity, u: Field) -> float:
    u = _as_field(u)
    return DiscreteEnergy(fam, nl, u.grid).dual_residual(u.flat)


# ---------------------------------------------------------------------------
# growth checkers
# ---------------------------------------------------------------------------

def _points(points, dim):
    if points is None:
        return [0.5] if dim == 1 else [(0.5, 0.5)]
    return list(points)


def _tail_slope(t, y, decades: float = 2.0) -> float:
    sel = t >= t[-1] / 10.0 ** decades
    y = np.maximum(y[sel], 1e-300)
    return float(np.polyfit(np.log(t[sel]), np.log(y), 1)[0])


def check_subcritical(nl: Nonlinearity, psi, points=None, t_range=(1e-3, 1e6),
                      n_t: int = 200, trend_tol: float = 1e-2) -> CheckReport:
    """Growth bound ``|f(x, t)| <= C (1 + psi(x, t))`` on a log grid, both signs."""
    t = np.logspace(math.log10(t_range[0]), math.log10(t_range[1]), n_t)
    worst_ratio, worst_pt, worst_slope = -1.0, None, -math.inf
    for x in _points(points, nl.dim):
        xa = np.asarray(x, dtype=float)
        dens = np.asarray(psi.density(xa, t))
        for sign in (1.0, -1.0):
            ratio = np.abs(nl.f(xa, sign * t)) / (1.0 + dens)
            k = int(np.argmax(ratio))
            if ratio[k] > worst_ratio:
                worst_ratio, worst_pt = float(ratio[k]), {"x": xa.tolist(), "t": float(sign * t[k])}
            if np.any(ratio > 0):
                worst_slope = max(worst_slope, _tail_slope(t, ratio))
    diverging = worst_slope > trend_tol
    msg = (f"|f|/(1+psi) grows like t^{worst_slope:.3g} as t grows" if diverging
           else f"no violation found at C = {worst_ratio:.6g} on t in [{t_range[0]:g}, {t_range[1]:g}]")
    return CheckReport("f_alpha", not diverging, constant=worst_ratio, worst_point=worst_pt,
                       margin=-worst_slope if np.isfinite(worst_slope) else math.inf, message=msg,
                       details={"tail_slope": worst_slope})


def check_superlinear_zero(nl: Nonlinearity, g_sup: float, points=None, k_max: int = 8) -> CheckReport:
    """``f(x, t) = o(|t|^{g_sup - 1})`` as ``t -> 0``, tested on ``|t| = 10^-k``, both signs."""
    t = 10.0 ** -np.arange(1, k_max + 1, dtype=float)
    ok, worst, worst_pt = True, -math.inf, None
    for x in _points(points, nl.dim):
        xa = np.asarray(x, dtype=float)
        for sign in (1.0, -1.0):
            ratio = np.abs(nl.f(xa, sign * t)) / t ** (g_sup - 1.0)
            first, last = ratio[0], ratio[-1]
            if first == 0.0 and last == 0.0:
                continue
            rel = last / first if first > 0 else math.inf
            if rel > worst:
                worst, worst_pt = float(rel), {"x": xa.tolist(), "sign": sign}
            if not rel < 1e-3:
                ok = False
    worst = max(worst, 0.0)
    return CheckReport("f_0", ok, constant=worst, worst_point=worst_pt, margin=1e-3 - worst,
                       message=f"ratio at t=1e-{k_max} is {worst:.3g} of its value at t=0.1")


def check_ar(nl: Nonlinearity, points=None, g_sup: float | None = None, theta: float | None = None,
             t_max: float | None = None, n_t: int = 200, rtol: float = 1e-12) -> CheckReport:
    """``0 < theta F(x, t) <= t f(x, t)`` for ``t0 <= |t| <= t_max`` (default ``1e3 t0``).

    When ``g_sup`` is given ``theta > g_sup`` is also required.
    """
    theta = nl.theta if theta is None else theta
    if theta is None:
        return CheckReport("AR", False, message="no AR exponent theta configured")
    t_max = 1e3 * nl.t0 if t_max is None else t_max
    t = np.logspace(math.log10(nl.t0), math.log10(t_max), n_t)
    margin, worst_pt, ok = math.inf, None, True
    for x in _points(points, nl.dim):
        xa = np.asarray(x, dtype=float)
        for sign in (1.0, -1.0):
            ts = sign * t
            F = nl.F(xa, ts)
            tf = ts * nl.f(xa, ts)
            gap = tf - theta * F
            scale = np.maximum(1.0, np.abs(theta * F))
            k = int(np.argmin(gap / scale))
            if gap[k] / scale[k] < margin:
                margin, worst_pt = float(gap[k] / scale[k]), {"x": xa.tolist(), "t": float(ts[k])}
            if np.any(gap < -rtol * scale) or np.any(F <= 0):
                ok = False
    msg = f"min (t f - theta F)/max(1, theta F) = {margin:.3g} on |t| in [{nl.t0:g}, {t_max:g}]"
    if g_sup is not None and not theta > g_sup:
        ok = False
        msg += f"; theta={theta:g} does not exceed g_sup={g_sup:g}"
    return CheckReport("AR", ok, constant=theta, worst_point=worst_pt, margin=margin, message=msg,
                       details={"t_range": [nl.t0, t_max]})


def check_ar_consequence(nl: Nonlinearity, points=None, theta: float | None = None,
                         t_max: float | None = None, n_t: int = 200, trend_tol: float = 1e-2) -> CheckReport:
    """``inf F(x, t) / |t|^theta`` over ``t0 <= |t| <= t_max``; flags a decaying trend."""
    theta = nl.theta if theta is None else theta
    if theta is None:
        return CheckReport("AR_lower_bound", False, message="no AR exponent theta configured")
    t_max = 1e3 * nl.t0 if t_max is None else t_max
    t = np.logspace(math.log10(nl.t0), math.log10(t_max), n_t)
    inf, worst_pt, slope = math.inf, None, -math.inf
    for x in _points(points, nl.dim):
        xa = np.asarray(x, dtype=float)
        for sign in (1.0, -1.0):
            ratio = nl.F(xa, sign * t) / t ** theta
            k = int(np.argmin(ratio))
            if ratio[k] < inf:
                inf, worst_pt = float(ratio[k]), {"x": xa.tolist(), "t": float(sign * t[k])}
            if np.all(ratio > 0):
                slope = max(slope, -_tail_slope(t, ratio))
    decaying = slope > trend_tol
    ok = inf > 0 and not decaying
    msg = f"inf F/|t|^theta = {inf:.6g}" + (" and decaying" if decaying else "")
    return CheckReport("AR_lower_bound", ok, constant=inf, worst_point=worst_pt, margin=inf, message=msg,
                       details={"decay_slope": slope})
