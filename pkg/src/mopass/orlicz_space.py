"""Modulars and norms of discrete fields in Musielak-Orlicz spaces.

Integrands are evaluated at nodes (trapezoid weights) for a :class:`Field`
and at cell quadrature points for a :class:`GradField`, where ``|grad u|``
is the integrated quantity.  Every function accepts either kind of field
and any object following the Phi-function protocol (``value``, ``density``,
``g0``, ``g_sup``), so conjugates and companions can be normed the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import Field, GradField, Grid, grad, random_dirichlet_field
from .phi_core import ConjugatePhi
from .reports import CheckReport, InputError

__all__ = ["modular", "luxemburg_norm", "amemiya_norm", "norm_report", "NormReport",
           "holder_check", "embedding_check", "poincare_ratio", "field_samples"]

LUX_RTOL = 1e-15
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def field_samples(u, grid: Grid | None = None, at: str = "nodes"):
    """``(points, |values|, weights)`` for quadrature of ``G(x, |u(x)|)``.

    Raw arrays are read as nodal values (``at="nodes"``, last axis the flat
    node index) or per-cell magnitudes (``at="cells"``); leading axes batch.
    """
    if isinstance(u, Field):
        if grid is not None and grid != u.grid:
            raise InputError("field is defined on a different grid")
        grid, arr, at = u.grid, u.flat, "nodes"
    elif isinstance(u, GradField):
        if grid is not None and grid != u.grid:
            raise InputError("gradient is defined on a different grid")
        grid, arr, at = u.grid, u.magnitude, "cells"
    elif grid is None:
        raise InputError("a raw array needs a grid")
    else:
        arr = np.asarray(u, dtype=float)
    if at == "cells":
        if arr.shape[-1] != grid.n_cells:
            raise InputError(f"expected {grid.n_cells} cell values, got shape {arr.shape}")
        return grid.cell_points, np.abs(arr), grid.cell_weights
    if arr.shape[-1] != grid.size:
        raise InputError(f"expected {grid.size} node values, got shape {arr.shape}")
    pts = grid.coords.reshape(grid.size, grid.dim) if grid.dim > 1 else grid.coords
    return pts, np.abs(arr), grid.node_weights.ravel()


def _scaled_modular(fam, pts, a, w, lam):
    """``sum_k w_k G(x_k, a_k / lam)`` with ``lam`` broadcast over leading axes."""
    lam = np.asarray(lam, dtype=float)[..., None]
    with np.errstate(over="ignore"):
        return np.sum(w * fam.value(pts, a / lam), axis=-1)


def modular(fam, u, grid: Grid | None = None, at: str = "nodes"):
    """``int G(x, |u|) dx`` by the grid quadrature."""
    pts, a, w = field_samples(u, grid, at)
    return _scaled_modular(fam, pts, a, w, 1.0)


def luxemburg_norm(fam, u, grid: Grid | None = None, at: str = "nodes", rtol: float = LUX_RTOL):
    """``inf{lam > 0 : modular(u / lam) <= 1}`` by bisection in ``log lam``.

    Leading batch axes of a raw array are normed independently.
    """
    pts, a, w = field_samples(u, grid, at)
    batch = a.shape[:-1]
    zero = np.all(a == 0, axis=-1)
    amax = np.where(zero, 1.0, np.max(a, axis=-1))
    lo = np.full(batch, 1e-12) * amax
    hi = amax * float(np.sum(w)) + 1.0
    for _ in range(400):
        bad = (_scaled_modular(fam, pts, a, w, hi) > 1.0) & ~zero
        if not np.any(bad):
            break
        hi = np.where(bad, hi * 4.0, hi)
    for _ in range(400):
        bad = (_scaled_modular(fam, pts, a, w, lo) <= 1.0) & ~zero
        if not np.any(bad):
            break
        lo = np.where(bad, lo * 1e-3, lo)
    llo, lhi = np.log(lo), np.log(hi)
    tol = np.maximum(math.log1p(rtol), 4.0 * np.spacing(np.maximum(np.abs(llo), np.abs(lhi))))
    for _ in range(400):
        if np.all(lhi - llo <= tol):
            break
        mid = 0.5 * (llo + lhi)
        inside = _scaled_modular(fam, pts, a, w, np.exp(mid)) <= 1.0
        lhi = np.where(inside, mid, lhi)
        llo = np.where(inside, llo, mid)
    out = np.where(zero, 0.0, np.exp(lhi))
    return float(out) if out.ndim == 0 else out


def amemiya_norm(fam, u, grid: Grid | None = None, at: str = "nodes", iters: int = 120):
    """``inf_{k > 0} (1 + modular(k u)) / k`` by golden-section search on ``log k``.

    The objective is convex in ``k``, hence unimodal in ``log k``; the search
    runs over ``[1e-8, 1e8]``.  Leading batch axes are handled in parallel.
    """
    pts, a, w = field_samples(u, grid, at)
    zero = np.all(a == 0, axis=-1)

    def obj(logk):
        k = np.exp(logk)
        with np.errstate(over="ignore"):
            return (1.0 + np.sum(w * fam.value(pts, k[..., None] * a), axis=-1)) / k

    shape = a.shape[:-1]
    lo = np.full(shape, math.log(1e-8))
    hi = np.full(shape, math.log(1e8))
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = obj(x1), obj(x2)
    for _ in range(iters):
        left = f1 <= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x1n = np.where(left, hi - _GOLDEN * (hi - lo), x2)
        x2n = np.where(left, x1, lo + _GOLDEN * (hi - lo))
        fn = obj(np.where(left, x1n, x2n))
        f1, f2 = np.where(left, fn, f2), np.where(left, f1, fn)
        x1, x2 = x1n, x2n
    out = np.where(zero, 0.0, np.minimum(f1, f2))
    return float(out) if out.ndim == 0 else out


@dataclass
class NormReport:
    modular: float
    luxemburg: float
    amemiya: float
    field_id: str = ""

    def to_dict(self) -> dict:
        return {"field_id": self.field_id, "modular": self.modular,
                "luxemburg": self.luxemburg, "amemiya": self.amemiya}


def norm_report(fam, u, grid: Grid | None = None, field_id: str = "") -> NormReport:
    return NormReport(float(modular(fam, u, grid)), float(luxemburg_norm(fam, u, grid)),
                      float(amemiya_norm(fam, u, grid)), field_id)


def holder_check(fam, u: Field, v: Field, grid: Grid | None = None) -> CheckReport:
    """``|int u v| <= 2 ||u||_G ||v||_{G*}`` on the node quadrature."""
    grid = grid or u.grid
    lhs = abs(float(np.sum(grid.node_weights.ravel() * u.flat * v.flat)))
    rhs = 2.0 * luxemburg_norm(fam, u, grid) * luxemburg_norm(ConjugatePhi(fam), v, grid)
    ratio = 0.0 if lhs == 0 else lhs / rhs
    return CheckReport("holder", ratio <= 1.0 + 1e-8, constant=ratio, margin=rhs - lhs,
                       message=f"|int uv| = {lhs:.6g}, 2|u|_G |v|_G* = {rhs:.6g}",
                       details={"lhs": lhs, "rhs": rhs, "ratio": ratio})


def embedding_check(fam_a, fam_b, trials: int = 2000, rng_seed: int = 0,
                    t_range=(1e-6, 1e6), trend_tol: float = 1e-2) -> CheckReport:
    """Smallest ``C`` with ``B(x, t) <= C (A(x, t) + 1)`` over sampled points.

    ``x`` is drawn uniformly in the box and ``t`` on a log grid.  If the
    log-log slope of the ratio over the top two decades of ``t`` exceeds
    ``trend_tol`` the ratio is reported as diverging.
    """
    rng = np.random.default_rng(rng_seed)
    ext = np.asarray(fam_a.extent)
    n_x = max(1, trials // 200)
    xs = rng.uniform(size=(n_x, len(ext))) * ext
    X = xs[:, 0][:, None] if len(ext) == 1 else xs[:, None, :]
    T = np.logspace(math.log10(t_range[0]), math.log10(t_range[1]), 200)[None, :]
    with np.errstate(over="ignore"):
        ratio = fam_b.value(X, T) / (fam_a.value(X, T) + 1.0)
    sup = float(np.max(ratio))
    top = T[0] >= t_range[1] / 100.0
    lt, lr = np.log(T[0, top]), np.log(np.max(ratio[:, top], axis=0))
    slope = float(np.polyfit(lt, lr, 1)[0])
    diverging = slope > trend_tol or not np.isfinite(sup)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return CheckReport("embedding", not diverging, constant=sup,
                       worst_point={"x": xs[i].tolist(), "t": float(T[0, j])},
                       margin=-slope,
                       message=("ratio diverges as t grows (tail slope %.3g)" % slope) if diverging
                       else f"no violation found at C = {sup:.6g}",
                       details={"tail_slope": slope})


def poincare_ratio(fam, grid: Grid, trials: int = 1000, rng_seed: int = 0) -> CheckReport:
    """Sup of ``||u||_G / ||grad u||_G`` over random smooth Dirichlet fields."""
    ratios = np.empty(trials)
    for k in range(trials):
        u = random_dirichlet_field(grid, rng_seed + k, amplitude=10.0 ** ((k % 7) - 3), modes=6)
        ratios[k] = luxemburg_norm(fam, u) / luxemburg_norm(fam, grad(u))
    k = int(np.argmax(ratios))
    return CheckReport("poincare", bool(np.all(np.isfinite(ratios))), constant=float(ratios[k]),
                       worst_point={"seed": rng_seed + k}, margin=float("nan"),
                       message=f"sup ||u||/||grad u|| = {ratios[k]:.6g} over {trials} fields")
