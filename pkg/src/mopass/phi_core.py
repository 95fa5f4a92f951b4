"""Generalized Phi-functions and their pointwise calculus.

A family ``G(x, t) = int_0^t g(x, s) ds`` is described by :class:`PhiFamily`.
Four kinds are supported:

* ``constant_power``     ``G = c t^p``
* ``variable_exponent``  ``G = c t^{p(x)}``
* ``double_phase``       ``G = c (t^p + a(x) t^q)``
* ``tabulated``          ``G`` integrated from an x-independent density ``g(t)``

Every object exposing ``value(x, t)``, ``density(x, t)``, ``g0``, ``g_sup``
and ``extent`` (families, conjugates, companions) can be handed to the
integral functionals in :mod:`mopass.orlicz_space`.

Coordinates follow one convention throughout: on a 1D domain ``x`` is an
array of scalar positions; on a 2D domain it has a trailing axis of length 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .reports import CheckReport, HypothesisError, HypothesisWarning, InputError, NumericError

__all__ = [
    "PhiKind", "SpatialFunction", "PhiFamily", "ConjugatePhi", "CompanionPsi",
    "SampleSpec", "phi_eval", "phi_density", "phi_derivative", "phi_inverse",
    "density_inverse", "conjugate_at", "estimate_sc_constants", "build_companion",
    "check_a0", "check_a1", "check_sc", "check_standing_assumption",
    "check_alpha_window", "alpha_window", "sobolev_conjugate",
]

BISECT_RTOL = 1e-12
BISECT_MAXITER = 60
_TAB_DECADES = (-12, 12)
_TAB_PER_DECADE = 512


class PhiKind(str, Enum):
    CONSTANT_POWER = "constant_power"
    VARIABLE_EXPONENT = "variable_exponent"
    DOUBLE_PHASE = "double_phase"
    TABULATED = "tabulated"


def split_coords(x, dim: int) -> list[np.ndarray]:
    x = np.asarray(x, dtype=float)
    if dim == 1:
        return [x]
    if x.ndim == 0 or x.shape[-1] != dim:
        raise InputError(f"expected coordinates with trailing axis of length {dim}, got shape {x.shape}")
    return [x[..., i] for i in range(dim)]


def _point_shape(x, dim: int) -> tuple:
    x = np.shape(x)
    return x if dim == 1 else x[:-1]


class SpatialFunction:
    """Scalar field on the domain box ``[0, L_1] x ... x [0, L_N]``.

    Either affine, ``c0 + c1 x_1 + c2 x_2 + ...`` (missing coefficients are
    zero, so ``(2.0, 1.0)`` means ``2 + x_1`` in any dimension), or a nodal
    table on a tensor grid with (multi)linear interpolation.
    """

    def __init__(self, coeffs: Sequence[float] | None = None, *,
                 nodes: Sequence[Sequence[float]] | None = None, values=None):
        if (coeffs is None) == (nodes is None):
            raise ValueError("give either affine coefficients or a nodal table")
        self.coeffs = None if coeffs is None else tuple(float(c) for c in coeffs)
        if nodes is not None:
            self.nodes = tuple(np.asarray(n, dtype=float) for n in nodes)
            self.values = np.asarray(values, dtype=float)
            if self.values.shape != tuple(len(n) for n in self.nodes):
                raise ValueError("table values do not match the node axes")
            if len(self.nodes) > 1:
                self._interp = RegularGridInterpolator(self.nodes, self.values)
        else:
            self.nodes = None
            self.values = None

    @classmethod
    def constant(cls, c: float) -> "SpatialFunction":
        return cls((c,))

    @classmethod
    def coerce(cls, obj) -> "SpatialFunction":
        if isinstance(obj, SpatialFunction):
            return obj
        if np.isscalar(obj):
            return cls.constant(float(obj))
        return cls(tuple(obj))

    @property
    def is_constant(self) -> bool:
        if self.coeffs is not None:
            return all(c == 0.0 for c in self.coeffs[1:])
        return bool(np.all(self.values == self.values.flat[0]))

    def __call__(self, coords: list[np.ndarray]) -> np.ndarray:
        if self.coeffs is not None:
            out = np.full(np.broadcast_shapes(*(c.shape for c in coords)), self.coeffs[0])
            for i, c in enumerate(self.coeffs[1:]):
                if c == 0.0:
                    continue
                if i >= len(coords):
                    raise InputError(f"coefficient for x_{i + 1} given on a {len(coords)}D domain")
                out = out + c * coords[i]
            return out
        if len(self.nodes) == 1:
            return np.interp(coords[0], self.nodes[0], self.values)
        pts = np.stack(np.broadcast_arrays(*coords[: len(self.nodes)]), axis=-1)
        return self._interp(pts)

    def bounds(self, extent: Sequence[float]) -> tuple[float, float]:
        """Exact min and max over the box (affine extremes sit at corners)."""
        if self.coeffs is None:
            return float(self.values.min()), float(self.values.max())
        lo = hi = self.coeffs[0]
        for i, c in enumerate(self.coeffs[1:]):
            if c == 0.0:
                continue
            if i >= len(extent):
                raise InputError(f"coefficient for x_{i + 1} given on a {len(extent)}D domain")
            lo += min(0.0, c * extent[i])
            hi += max(0.0, c * extent[i])
        return float(lo), float(hi)

    def describe(self) -> list[float] | dict:
        if self.coeffs is not None:
            return list(self.coeffs)
        return {"nodes": [n.tolist() for n in self.nodes], "values": self.values.tolist()}


# ---------------------------------------------------------------------------
# bracketing bisection shared by every inverse
# ---------------------------------------------------------------------------

def _log_bisect(fun, target, lo, hi, rtol=BISECT_RTOL, maxiter=BISECT_MAXITER, expand=200):
    """Solve ``fun(t) = target`` for increasing ``fun`` by bisection in ``log t``.

    ``lo`` and ``hi`` are initial brackets (positive arrays); they are widened
    geometrically until they straddle the root.  Returns the geometric
    midpoint of the final bracket.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(expand):
        bad = fun(lo) > target
        if not np.any(bad):
            break
        lo = np.where(bad, lo * 0.25, lo)
    for _ in range(expand):
        bad = fun(hi) < target
        if not np.any(bad):
            break
        hi = np.where(bad, hi * 4.0, hi)
    llo, lhi = np.log(lo), np.log(hi)
    # a log-width below a few ulps of log t is unreachable
    tol = np.maximum(math.log1p(rtol), 4.0 * np.spacing(np.maximum(np.abs(llo), np.abs(lhi))))
    for _ in range(maxiter):
        if np.all(lhi - llo <= tol):
            break
        mid = 0.5 * (llo + lhi)
        above = fun(np.exp(mid)) > target
        lhi = np.where(above, mid, lhi)
        llo = np.where(above, llo, mid)
    else:
        if np.any(lhi - llo > tol):
            raise NumericError(f"bisection did not reach rtol={rtol} in {maxiter} iterations")
    return np.exp(0.5 * (llo + lhi))


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhiFamily:
    """Descriptor of a generalized Phi-function ``G(x, t)``.

    Use the constructors :meth:`constant_power`, :meth:`variable_exponent`,
    :meth:`double_phase` and :meth:`tabulated`.  The (SC) constants ``g0`` and
    ``g_sup`` are cached at construction: closed form for the three analytic
    kinds, sampled for tabulated densities.
    """

    kind: PhiKind
    extent: tuple = (1.0,)
    p: float | None = None
    p_of_x: SpatialFunction | None = None
    q: float | None = None
    a_of_x: SpatialFunction | None = None
    density_fn: Callable | None = None
    scale: float = 1.0
    g0: float = field(init=False)
    g_sup: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        if any(e <= 0 for e in self.extent) or len(self.extent) not in (1, 2):
            raise ValueError(f"extent must hold 1 or 2 positive lengths, got {self.extent}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        k = self.kind
        if k is PhiKind.CONSTANT_POWER:
            if not self.p > 1:
                raise ValueError("constant_power needs p > 1")
        elif k is PhiKind.VARIABLE_EXPONENT:
            lo, _ = self.p_of_x.bounds(self.extent)
            if not lo > 1:
                raise ValueError("variable_exponent needs p(x) > 1 on the whole domain")
        elif k is PhiKind.DOUBLE_PHASE:
            if not (self.p > 1 and self.q >= self.p):
                raise ValueError("double_phase needs 1 < p <= q")
            if self.a_of_x.bounds(self.extent)[0] < 0:
                raise ValueError("double_phase weight a(x) must be nonnegative")
        elif k is PhiKind.TABULATED:
            self._build_table()
        g0, gs = estimate_sc_constants(self)
        object.__setattr__(self, "g0", g0)
        object.__setattr__(self, "g_sup", gs)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant_power(cls, p: float, extent=(1.0,), scale: float = 1.0) -> "PhiFamily":
        return cls(PhiKind.CONSTANT_POWER, extent, p=float(p), scale=scale)

    @classmethod
    def variable_exponent(cls, p_of_x, extent=(1.0,), scale: float = 1.0) -> "PhiFamily":
        return cls(PhiKind.VARIABLE_EXPONENT, extent, p_of_x=SpatialFunction.coerce(p_of_x), scale=scale)

    @classmethod
    def double_phase(cls, p: float, q: float, a_of_x, extent=(1.0,), scale: float = 1.0) -> "PhiFamily":
        return cls(PhiKind.DOUBLE_PHASE, extent, p=float(p), q=float(q),
                   a_of_x=SpatialFunction.coerce(a_of_x), scale=scale)

    @classmethod
    def tabulated(cls, density: Callable, extent=(1.0,), scale: float = 1.0) -> "PhiFamily":
        """Family from an x-independent density ``g(t)`` (vectorized callable)."""
        return cls(PhiKind.TABULATED, extent, density_fn=density, scale=scale)

    @property
    def dim(self) -> int:
        return len(self.extent)

    @property
    def x_independent(self) -> bool:
        if self.kind is PhiKind.VARIABLE_EXPONENT:
            return self.p_of_x.is_constant
        if self.kind is PhiKind.DOUBLE_PHASE:
            return self.a_of_x.is_constant
        return True

    def describe(self) -> dict:
        d = {"kind": self.kind.value, "extent": list(self.extent), "scale": self.scale,
             "g0": self.g0, "g_sup": self.g_sup}
        if self.p is not None:
            d["p"] = self.p
        if self.q is not None:
            d["q"] = self.q
        if self.p_of_x is not None:
            d["p_of_x"] = self.p_of_x.describe()
        if self.a_of_x is not None:
            d["a_of_x"] = self.a_of_x.describe()
        return d

    # -- tabulated support ---------------------------------------------------
    def _build_table(self):
        a, b = _TAB_DECADES
        tg = np.logspace(a, b, (b - a) * _TAB_PER_DECADE + 1)
        gv = np.asarray(self.density_fn(tg), dtype=float)
        if np.any(gv <= 0) or np.any(np.diff(gv) < 0):
            raise ValueError("tabulated density must be positive and nondecreasing on t > 0")
        p_lo = 1.0 + math.log(gv[1] / gv[0]) / math.log(tg[1] / tg[0])
        G0 = tg[0] * gv[0] / p_lo
        Gc = G0 + np.concatenate(([0.0], np.cumsum(0.5 * (gv[1:] + gv[:-1]) * np.diff(tg))))
        p_hi = tg[-1] * gv[-1] / Gc[-1]
        object.__setattr__(self, "_tab", (tg, gv, Gc, p_lo, p_hi))

    def _tab_value(self, t):
        tg, gv, Gc, p_lo, p_hi = self._tab
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        low = t < tg[0]
        high = t > tg[-1]
        mid = ~(low | high)
        out[low] = Gc[0] * (t[low] / tg[0]) ** p_lo
        out[high] = Gc[-1] * (t[high] / tg[-1]) ** p_hi
        tm = t[mid]
        k = np.clip(np.searchsorted(tg, tm, side="right") - 1, 0, len(tg) - 2)
        out[mid] = Gc[k] + 0.5 * (tm - tg[k]) * (gv[k] + self.density_fn(tm))
        return out

    # -- pointwise calculus (no domain validation; see module functions) ----
    def exponent(self, x) -> np.ndarray:
        return self.p_of_x(split_coords(x, self.dim))

    def weight(self, x) -> np.ndarray:
        return self.a_of_x(split_coords(x, self.dim))

    def _shape(self, x, t) -> tuple:
        return np.broadcast_shapes(_point_shape(x, self.dim), np.shape(t))

    def value(self, x, t) -> np.ndarray:
        """``G(x, t)``."""
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k is PhiKind.CONSTANT_POWER:
            out = t ** self.p
        elif k is PhiKind.VARIABLE_EXPONENT:
            out = t ** self.exponent(x)
        elif k is PhiKind.DOUBLE_PHASE:
            out = t ** self.p + self.weight(x) * t ** self.q
        else:
            out = self._tab_value(t)
        return np.broadcast_to(self.scale * out, self._shape(x, t))

    def density(self, x, t) -> np.ndarray:
        """``g(x, t) = dG/dt``."""
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k is PhiKind.CONSTANT_POWER:
            out = self.p * t ** (self.p - 1.0)
        elif k is PhiKind.VARIABLE_EXPONENT:
            e = self.exponent(x)
            out = e * t ** (e - 1.0)
        elif k is PhiKind.DOUBLE_PHASE:
            out = self.p * t ** (self.p - 1.0) + self.weight(x) * self.q * t ** (self.q - 1.0)
        else:
            out = np.where(t > 0, self.density_fn(np.maximum(t, 1e-300)), 0.0)
        return np.broadcast_to(self.scale * out, self._shape(x, t))

    def derivative(self, x, t) -> np.ndarray:
        """``g'(x, t)``; tabulated densities use a log-centered difference."""
        t = np.asarray(t, dtype=float)
        k = self.kind
        with np.errstate(divide="ignore", invalid="ignore"):
            if k is PhiKind.CONSTANT_POWER:
                out = self.p * (self.p - 1.0) * t ** (self.p - 2.0)
            elif k is PhiKind.VARIABLE_EXPONENT:
                e = self.exponent(x)
                out = e * (e - 1.0) * t ** (e - 2.0)
            elif k is PhiKind.DOUBLE_PHASE:
                out = (self.p * (self.p - 1.0) * t ** (self.p - 2.0)
                       + self.weight(x) * self.q * (self.q - 1.0) * t ** (self.q - 2.0))
            else:
                d = 1e-4
                out = (self.density_fn(t * math.exp(d)) - self.density_fn(t * math.exp(-d))) / (
                    t * (math.exp(d) - math.exp(-d)))
        return np.broadcast_to(self.scale * out, self._shape(x, t))

    def inverse(self, x, s) -> np.ndarray:
        """``G^{-1}(x, s)``: closed form for power kinds, bisection otherwise."""
        s = np.asarray(s, dtype=float)
        shape = self._shape(x, s)
        k = self.kind
        if k is PhiKind.CONSTANT_POWER:
            return np.broadcast_to((s / self.scale) ** (1.0 / self.p), shape)
        if k is PhiKind.VARIABLE_EXPONENT:
            return np.broadcast_to((s / self.scale) ** (1.0 / self.exponent(x)), shape)
        return _power_bracket_inverse(self.value, x, s, self.g0, self.g_sup, shape, self.dim)

    def density_inverse(self, x, s) -> np.ndarray:
        """``g^{-1}(x, s) = sup{t >= 0 : g(x, t) <= s}``."""
        s = np.asarray(s, dtype=float)
        shape = self._shape(x, s)
        k = self.kind
        c = self.scale
        if k is PhiKind.CONSTANT_POWER:
            return np.broadcast_to((s / (c * self.p)) ** (1.0 / (self.p - 1.0)), shape)
        if k is PhiKind.VARIABLE_EXPONENT:
            e = self.exponent(x)
            return np.broadcast_to((s / (c * e)) ** (1.0 / (e - 1.0)), shape)
        # g is (SC)-controlled with exponents g0 - 1 and g_sup - 1
        return _power_bracket_inverse(self.density, x, s, self.g0 - 1.0, self.g_sup - 1.0, shape, self.dim)

    def conjugate(self, x, s) -> np.ndarray:
        """``G*(x, s) = s t* - G(x, t*)`` with ``t* = g^{-1}(x, s)`` (Young equality)."""
        s = np.asarray(s, dtype=float)
        ts = self.density_inverse(x, s)
        return np.maximum(s * ts - self.value(x, ts), 0.0)


def _power_bracket_inverse(fun, x, s, e_lo, e_hi, shape, dim):
    """Invert an increasing ``fun(x, .)`` bracketed by ``sigma^e_lo`` and ``sigma^e_hi`` growth."""
    s = np.broadcast_to(s, shape).astype(float)
    out = np.zeros(shape)
    pos = s > 0
    if not np.any(pos):
        return out
    if dim == 1:
        xb = np.broadcast_to(np.asarray(x, dtype=float), shape)[pos]
    else:
        xb = np.broadcast_to(np.asarray(x, dtype=float), shape + (dim,))[pos]
    sp = s[pos]
    f1 = fun(xb, np.ones_like(sp))
    r = sp / f1
    a, b = r ** (1.0 / e_hi), r ** (1.0 / e_lo)
    lo, hi = np.minimum(a, b) * 0.999, np.maximum(a, b) * 1.001
    out[pos] = _log_bisect(lambda t: fun(xb, t), sp, lo, hi)
    return out


@dataclass(frozen=True, eq=False)
class ConjugatePhi:
    """The conjugate ``G*`` of a family, exposed through the Phi-function protocol."""

    base: PhiFamily

    @property
    def extent(self):
        return self.base.extent

    @property
    def dim(self):
        return self.base.dim

    @property
    def g0(self) -> float:
        gs = self.base.g_sup
        return gs / (gs - 1.0)

    @property
    def g_sup(self) -> float:
        g0 = self.base.g0
        return g0 / (g0 - 1.0)

    def value(self, x, s):
        return self.base.conjugate(x, s)

    def density(self, x, s):
        return self.base.density_inverse(x, s)


@dataclass(frozen=True, eq=False)
class CompanionPsi:
    """Subcritical companion ``Psi`` defined by ``Psi^{-1}(x, s) = s^{-alpha} G^{-1}(x, s)``.

    ``Psi`` itself is evaluated by inverting that strictly increasing map and
    ``psi = dPsi/dt`` by centered finite differences.
    """

    base: PhiFamily
    alpha: float
    N: int

    @property
    def extent(self):
        return self.base.extent

    @property
    def dim(self):
        return self.base.dim

    @property
    def psi_g0(self) -> float:
        return 1.0 / (1.0 / self.base.g0 - self.alpha)

    @property
    def psi_gsup(self) -> float:
        return 1.0 / (1.0 / self.base.g_sup - self.alpha)

    g0 = psi_g0
    g_sup = psi_gsup

    def inverse(self, x, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(s > 0, s ** (-self.alpha) * self.base.inverse(x, s), 0.0)

    def value(self, x, t):
        t = np.asarray(t, dtype=float)
        if self.alpha == 0.0:
            return self.base.value(x, t)
        shape = self.base._shape(x, t)
        tb = np.broadcast_to(t, shape).astype(float)
        out = np.zeros(shape)
        pos = tb > 0
        if not np.any(pos):
            return out
        dim = self.dim
        if dim == 1:
            xb = np.broadcast_to(np.asarray(x, dtype=float), shape)[pos]
        else:
            xb = np.broadcast_to(np.asarray(x, dtype=float), shape + (dim,))[pos]
        tp = tb[pos]
        c = self.base.inverse(xb, np.ones_like(tp))
        a_lo = 1.0 / self.base.g_sup - self.alpha
        a_hi = 1.0 / self.base.g0 - self.alpha
        L = np.log(tp / c)
        l1, l2 = L / a_hi, L / a_lo
        lo = np.exp(np.minimum(l1, l2) - 1e-3)
        hi = np.exp(np.maximum(l1, l2) + 1e-3)
        out[pos] = _log_bisect(lambda s: self.inverse(xb, s), tp, lo, hi, rtol=1e-14, maxiter=200)
        return out

    def density(self, x, t):
        t = np.asarray(t, dtype=float)
        if self.alpha == 0.0:
            return self.base.density(x, t)
        h = np.maximum(1e-6, 1e-6 * t)
        h = np.where(t - h <= 0, 0.5 * t, h)
        safe = np.where(h > 0, h, 1.0)
        d = (self.value(x, t + h) - self.value(x, np.maximum(t - h, 0.0))) / (2.0 * safe)
        return np.where(h > 0, d, 0.0)


# ---------------------------------------------------------------------------
# module-level operations with input validation
# ---------------------------------------------------------------------------

def _validate(fam, x, t, name="t"):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise InputError(f"{name} must be nonnegative")
    coords = split_coords(x, fam.dim)
    for c, L in zip(coords, fam.extent):
        tol = 1e-12 * L
        if np.any(c < -tol) or np.any(c > L + tol):
            raise InputError(f"x outside the domain box {fam.extent}")
    return t


def phi_eval(fam, x, t) -> np.ndarray:
    """``G(x, t)`` for ``t >= 0`` and ``x`` in the domain box.

    >>> phi_eval(PhiFamily.constant_power(2.0), 0.3, 3.0)
    array(9.)
    """
    return fam.value(x, _validate(fam, x, t))


def phi_density(fam, x, t) -> np.ndarray:
    return fam.density(x, _validate(fam, x, t))


def phi_derivative(fam, x, t) -> np.ndarray:
    return fam.derivative(x, _validate(fam, x, t))


def phi_inverse(fam, x, s) -> np.ndarray:
    """``t`` with ``G(x, t) = s`` to relative tolerance ``1e-12``."""
    return fam.inverse(x, _validate(fam, x, s, "s"))


def density_inverse(fam, x, s) -> np.ndarray:
    return fam.density_inverse(x, _validate(fam, x, s, "s"))


def conjugate_at(fam, x, s) -> np.ndarray:
    """Conjugate ``G*(x, s) = sup_t (s t - G(x, t))`` via the maximizer ``t* = g^{-1}(x, s)``."""
    return fam.conjugate(x, _validate(fam, x, s, "s"))


@dataclass(frozen=True)
class SampleSpec:
    """Sampling of ``(x, t)``: a tensor grid in x and log-spaced t."""

    n_x: int = 17
    t_min: float = 1e-6
    t_max: float = 1e6
    n_t: int = 241

    def points(self, extent) -> np.ndarray:
        axes = [np.linspace(0.0, L, self.n_x) for L in extent]
        if len(axes) == 1:
            return axes[0]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))

    def ts(self) -> np.ndarray:
        return np.logspace(math.log10(self.t_min), math.log10(self.t_max), self.n_t)


TABLE_SAMPLES = SampleSpec(n_x=2, t_min=1e-12, t_max=1e12, n_t=481)


def _sample_pairs(fam, spec: SampleSpec):
    xs = spec.points(fam.extent)
    ts = spec.ts()
    if fam.dim == 1:
        X = xs[:, None]
    else:
        X = xs[:, None, :]
    return X, ts[None, :]


def estimate_sc_constants(fam, sample_grid: SampleSpec | None = None, method: str = "auto"):
    """(SC) constants ``(g0, g_sup)``: ``inf + 1`` and ``sup + 1`` of ``t g'/g``.

    ``method="auto"`` uses closed forms where they exist (power, variable
    exponent, double phase) and sampling otherwise; ``"sampled"`` always
    samples on ``sample_grid`` (default: 17 points per axis, t log-spaced on
    ``[1e-6, 1e6]``; tabulated families use ``[1e-12, 1e12]``).
    """
    if method not in ("auto", "sampled"):
        raise ValueError(f"unknown method {method!r}")
    k = getattr(fam, "kind", None)
    if method == "auto":
        if k is PhiKind.CONSTANT_POWER:
            return fam.p, fam.p
        if k is PhiKind.VARIABLE_EXPONENT:
            return fam.p_of_x.bounds(fam.extent)
        if k is PhiKind.DOUBLE_PHASE:
            amax = fam.a_of_x.bounds(fam.extent)[1]
            return fam.p, (fam.q if amax > 0 else fam.p)
    if sample_grid is None:
        # x-independent tables are cheap to sample over a much wider t range
        sample_grid = TABLE_SAMPLES if k is PhiKind.TABULATED else SampleSpec()
    X, T = _sample_pairs(fam, sample_grid)
    ratio = T * fam.derivative(X, T) / fam.density(X, T)
    return float(np.min(ratio)) + 1.0, float(np.max(ratio)) + 1.0


def sobolev_conjugate(g0: float, N: int) -> float:
    """``N g0 / (N - g0)`` below the dimension, ``+inf`` otherwise."""
    return N * g0 / (N - g0) if g0 < N else math.inf


def alpha_window(fam, N: int) -> tuple[float, float]:
    return 1.0 / fam.g0 - 1.0 / fam.g_sup, 1.0 / N


def check_alpha_window(fam, alpha: float, N: int) -> CheckReport:
    lo, hi = alpha_window(fam, N)
    ok = lo < alpha < hi
    margin = min(alpha - lo, hi - alpha)
    return CheckReport("alpha_window", ok, constant=alpha, margin=margin,
                       message=f"alpha={alpha:g} {'inside' if ok else 'outside'} ({lo:g}, {hi:g})",
                       details={"lower": lo, "upper": hi})


def check_standing_assumption(fam, N: int) -> CheckReport:
    """``g_sup < min(g0*, N)``, needed for the alpha window to be nonempty."""
    bound = min(sobolev_conjugate(fam.g0, N), N)
    ok = fam.g_sup < bound
    return CheckReport("g_sup_below_min_g0star_N", ok, constant=bound, margin=bound - fam.g_sup,
                       message=f"g_sup={fam.g_sup:g} vs min(g0*, N)={bound:g}")


def build_companion(fam: PhiFamily, alpha: float, N: int | None = None,
                    override: bool = False) -> CompanionPsi:
    """Companion ``Psi`` with ``Psi^{-1}(x, s) = s^{-alpha} G^{-1}(x, s)``.

    Raises
    ------
    HypothesisError
        ``alpha`` outside ``(1/g0 - 1/g_sup, 1/N)`` and ``override`` is false.
        With ``override`` a :class:`HypothesisWarning` is issued instead.
        ``alpha >= 1/g_sup`` always raises: the defining map is then not
        increasing and ``Psi`` does not exist.
    """
    N = fam.dim if N is None else int(N)
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha >= 1.0 / fam.g_sup:
        raise HypothesisError(f"alpha={alpha:g} >= 1/g_sup={1.0 / fam.g_sup:g}: Psi^-1 is not increasing",
                              "alpha_psi_defined", alpha, 1.0 / fam.g_sup)
    lo, hi = alpha_window(fam, N)
    for ok, bound, limit in ((alpha > lo, "alpha_lower", lo), (alpha < hi, "alpha_upper", hi)):
        if not ok:
            msg = f"alpha={alpha:g} violates {bound} ({limit:g}); window is ({lo:g}, {hi:g})"
            if not override:
                raise HypothesisError(msg, bound, alpha, limit)
            warnings.warn(msg, HypothesisWarning, stacklevel=2)
    return CompanionPsi(fam, alpha, N)


# ---------------------------------------------------------------------------
# structural checkers
# ---------------------------------------------------------------------------

def check_sc(fam, sample_grid: SampleSpec | None = None) -> CheckReport:
    """Sampled (SC) bounds against the cached constants."""
    spec = sample_grid or SampleSpec()
    X, T = _sample_pairs(fam, spec)
    ratio = T * fam.derivative(X, T) / fam.density(X, T)
    lo_m = float(np.min(ratio - (fam.g0 - 1.0)))
    hi_m = float(np.min((fam.g_sup - 1.0) - ratio))
    margin = min(lo_m, hi_m)
    ok = fam.g0 > 1.0 and margin >= -1e-8
    return CheckReport("SC", ok, constant=fam.g_sup, margin=margin,
                       message=f"g0={fam.g0:g}, g_sup={fam.g_sup:g}",
                       details={"g0": fam.g0, "g_sup": fam.g_sup})


def check_a0(fam, n_x: int = 65) -> CheckReport:
    """Smallest ``C`` with ``1/C <= g(x, 1) <= C`` over sampled x."""
    xs = SampleSpec(n_x=n_x).points(fam.extent)
    g1 = np.asarray(fam.density(xs, np.ones(_point_shape(xs, fam.dim))))
    gmin, gmax = float(g1.min()), float(g1.max())
    C = max(gmax, 1.0 / gmin, 1.0)
    i = int(np.argmax(np.maximum(g1, 1.0 / g1)))
    return CheckReport("A0", bool(np.isfinite(C) and gmin > 0), constant=C,
                       worst_point=np.asarray(xs)[i].tolist(), margin=gmin,
                       message=f"g(x,1) in [{gmin:g}, {gmax:g}]")


def _ball_points(rng, centers, R, k, extent):
    trials, dim = centers.shape
    v = rng.normal(size=(trials, k, dim))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    rad = R[:, None, None] * rng.uniform(size=(trials, k, 1)) ** (1.0 / dim)
    pts = centers[:, None, :] + rad * v
    # clipping toward the box keeps points inside the ball (the center is in the box)
    return np.clip(pts, 0.0, np.asarray(extent))


def check_a1(fam, trials: int = 1000, rng_seed: int = 0, n_t: int = 16,
             n_probe: int = 16, radius_range=(0.05, 0.95)) -> CheckReport:
    """Sampled diagnostic for (A1): ``G(x, t) <= C G(y, t)`` on small balls.

    Draws balls ``B_R`` (``R < 1``) centred in the domain, pairs ``x, y`` in
    ``B_R``, and scans ``t`` over the range where the ball infimum
    ``G^-_B(t)`` lies in ``[1, R^{-N}]``.  Reports the smallest ``C`` that
    makes every sampled inequality hold; this is never a certificate.
    """
    rng = np.random.default_rng(rng_seed)
    dim = fam.dim
    ext = np.asarray(fam.extent)
    centers = rng.uniform(size=(trials, dim)) * ext
    R = rng.uniform(*radius_range, size=trials)
    pts = _ball_points(rng, centers, R, n_probe + 2, ext)     # first two are x and y
    P = pts[..., 0] if dim == 1 else pts
    s_hi = R ** (-dim)
    t_lo = fam.inverse(P, np.ones(pts.shape[:2])).max(axis=1)
    t_hi = fam.inverse(P, np.broadcast_to(s_hi[:, None], pts.shape[:2])).max(axis=1)
    frac = np.linspace(0.0, 1.0, n_t)
    T = np.exp(np.log(t_lo)[:, None] + frac[None, :] * np.log(t_hi / t_lo)[:, None])
    if dim == 1:
        Gx = fam.value(P[:, 0:1], T)
        Gy = fam.value(P[:, 1:2], T)
    else:
        Gx = fam.value(P[:, 0:1, :], T)
        Gy = fam.value(P[:, 1:2, :], T)
    ratio = np.maximum(Gx / Gy, Gy / Gx)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    C = float(ratio[i, j])
    worst = {"x": pts[i, 0].tolist(), "y": pts[i, 1].tolist(), "t": float(T[i, j]), "R": float(R[i])}
    return CheckReport("A1", bool(np.isfinite(C)), constant=C, worst_point=worst, margin=float("nan"),
                       message=f"no violation found at C = {C:.6g} ({trials} sampled balls)",
                       details={"trials": trials, "seed": rng_seed})
