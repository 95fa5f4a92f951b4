"""Seeded property sweeps: the inequalities of the Phi-function calculus,
norm relations, gradient consistency, vector-field monotonicity, the
mountain-pass geometry and the shooting-oracle comparison.

Every suite returns a :class:`SuiteReport`; a suite passes iff every
recorded check has zero violations.  An inequality ``lhs <= rhs`` counts as
violated when ``lhs > rhs + 1e-10 * max(1, |rhs|)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .discretization import Grid, random_dirichlet_field
from .mountain_pass import GeometryError, MountainPassConfig, probe_geometry, shooting_oracle, solve
from .orlicz_space import amemiya_norm, luxemburg_norm, modular
from .phi_core import ConjugatePhi, PhiFamily
from .problem import DiscreteEnergy, Nonlinearity, flux

__all__ = ["SLACK", "SuiteCheck", "SuiteReport", "bundled_families", "bundled_nonlinearities",
           "violations", "monotonicity_rhs", "SUITES", "run_suite"]

SLACK = 1e-10
_GL64_X, _GL64_W = np.polynomial.legendre.leggauss(64)


def violations(lhs, rhs, slack: float = SLACK) -> np.ndarray:
    """Boolean mask of ``lhs > rhs + slack * max(1, |rhs|)``."""
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    return ~(lhs <= rhs + slack * np.maximum(1.0, np.abs(rhs)))


@dataclass
class SuiteCheck:
    name: str
    samples: int
    violations: int
    worst: float = float("nan")
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"check": self.name, "samples": self.samples, "violations": self.violations,
                "worst": self.worst, "pass": self.passed, "note": self.note}


@dataclass
class SuiteReport:
    suite: str
    seed: int
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def total_violations(self) -> int:
        return sum(c.violations for c in self.checks)

    def add(self, name, lhs, rhs, note: str = "", slack: float = SLACK) -> SuiteCheck:
        lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
        bad = violations(lhs, rhs, slack)
        if slack == 0.0:
            # tolerance checks: report the largest observed quantity itself
            worst = float(np.nanmax(lhs)) if lhs.size else 0.0
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                gap = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
            worst = float(np.nanmax(gap)) if gap.size else 0.0
        c = SuiteCheck(name, int(bad.size), int(bad.sum()), worst, note)
        self.checks.append(c)
        return c

    def flag(self, name, ok: bool, samples: int = 1, worst: float = float("nan"), note: str = "") -> SuiteCheck:
        c = SuiteCheck(name, samples, 0 if ok else 1, worst, note)
        self.checks.append(c)
        return c

    def lines(self) -> list[str]:
        out = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.violations}/{c.samples} violations"
               + (f", worst {c.worst:.3g}" if np.isfinite(c.worst) else "")
               + (f" ({c.note})" if c.note else "") for c in self.checks]
        out.append(f"{self.suite}: {len(self.checks) - sum(not c.passed for c in self.checks)}/"
                   f"{len(self.checks)} checks passed, {self.total_violations} violations, {self.seconds:.1f} s")
        return out

    def to_dict(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "pass": self.passed,
                "violations": self.total_violations, "seconds": self.seconds,
                "checks": [c.to_dict() for c in self.checks]}


def bundled_families(extent=(1.0,)) -> dict:
    return {
        "constant_power": PhiFamily.constant_power(2.5, extent),
        "variable_exponent": PhiFamily.variable_exponent((1.5, 1.0), extent),
        "double_phase": PhiFamily.double_phase(2.0, 3.0, (0.0, 1.0), extent),
    }


def bundled_nonlinearities(dim: int = 1) -> dict:
    return {
        "pure_power": Nonlinearity.pure_power(4.0, theta=4.0, dim=dim),
        "weighted_power": Nonlinearity.weighted_power(3.5, (1.0, 1.0), theta=3.5, dim=dim),
    }


def _log_uniform(rng, n, lo=1e-3, hi=1e3):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def _xs(rng, fam, n):
    ext = np.asarray(fam.extent)
    x = rng.uniform(size=(n, len(ext))) * ext
    return x[:, 0] if len(ext) == 1 else x


# ---------------------------------------------------------------------------
# lemmas
# ---------------------------------------------------------------------------

def _lemma_checks(rep: SuiteReport, name: str, fam, rng, n: int):
    x = _xs(rng, fam, n)
    a, b, t = _log_uniform(rng, n), _log_uniform(rng, n), _log_uniform(rng, n)
    g0, gs = fam.g0, fam.g_sup
    # (a) a g(b) <= a g(a) + b g(b)
    rep.add(f"{name}: a g(b) <= a g(a) + b g(b)",
            a * fam.density(x, b), a * fam.density(x, a) + b * fam.density(x, b))
    # (b) g0 <= t g / G <= g_sup
    ratio = t * fam.density(x, t) / fam.value(x, t)
    rep.add(f"{name}: g0 <= t g/G", np.full(n, g0), ratio)
    rep.add(f"{name}: t g/G <= g_sup", ratio, np.full(n, gs))
    # (c) power sandwich, both sides of sigma = 1
    sig = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), n))
    G, Gs = fam.value(x, t), fam.value(x, sig * t)
    lo = np.where(sig >= 1, sig ** g0, sig ** gs) * G
    hi = np.where(sig >= 1, sig ** gs, sig ** g0) * G
    rep.add(f"{name}: lower power bound on G(sigma t)", lo, Gs)
    rep.add(f"{name}: upper power bound on G(sigma t)", Gs, hi)
    # (d) quasi-subadditivity with C = 2^(g_sup - 1)
    rep.add(f"{name}: G(a+b) <= 2^(g_sup-1) (G(a) + G(b))",
            fam.value(x, a + b), 2.0 ** (gs - 1.0) * (fam.value(x, a) + fam.value(x, b)))
    # conjugate ratio s g^-1(s) / G*(s) between the conjugate exponents
    s = _log_uniform(rng, n)
    cr = s * fam.density_inverse(x, s) / fam.conjugate(x, s)
    rep.add(f"{name}: g_sup/(g_sup-1) <= s g^-1(s)/G*(s)", np.full(n, gs / (gs - 1.0)), cr)
    rep.add(f"{name}: s g^-1(s)/G*(s) <= g0/(g0-1)", cr, np.full(n, g0 / (g0 - 1.0)))
    # Young inequality and its equality case
    rep.add(f"{name}: Young s t <= G(t) + G*(s)", s * t, fam.value(x, t) + fam.conjugate(x, s))
    gt = fam.density(x, t)
    resid = np.abs(t * gt - fam.value(x, t) - fam.conjugate(x, gt)) / np.maximum(1.0, t * gt)
    rep.add(f"{name}: Young equality at s = g(t) (residual <= 1e-8)", resid, np.full(n, 1e-8), slack=0.0)


def _modular_norm_checks(rep: SuiteReport, name: str, fam, rng, grid: Grid, n: int):
    """Norm-modular power relations on random fields scaled above and below the unit ball."""
    U = rng.uniform(-1.0, 1.0, size=(n, grid.size))
    U[:, grid.boundary_mask.ravel()] = 0.0
    lux = luxemburg_norm(fam, U, grid)
    target = np.where(np.arange(n) % 2 == 0, _log_uniform(rng, n, 1.001, 1e3), _log_uniform(rng, n, 1e-3, 0.999))
    U = U * (target / lux)[:, None]
    lux = luxemburg_norm(fam, U, grid)
    rho = modular(fam, U, grid)
    big = lux > 1
    lo = np.where(big, lux ** fam.g0, lux ** fam.g_sup)
    hi = np.where(big, lux ** fam.g_sup, lux ** fam.g0)
    rep.add(f"{name}: power lower bound on modular by norm", lo, rho)
    rep.add(f"{name}: power upper bound on modular by norm", rho, hi)


def _holder_checks(rep: SuiteReport, name: str, fam, rng, grid: Grid, n: int):
    U = rng.uniform(-1.0, 1.0, size=(n, grid.size)) * _log_uniform(rng, n, 1e-2, 1e2)[:, None]
    V = rng.uniform(-1.0, 1.0, size=(n, grid.size)) * _log_uniform(rng, n, 1e-2, 1e2)[:, None]
    U[:, grid.boundary_mask.ravel()] = 0.0
    V[:, grid.boundary_mask.ravel()] = 0.0
    w = grid.node_weights.ravel()
    lhs = np.abs(np.sum(w * U * V, axis=-1))
    rhs = 2.0 * luxemburg_norm(fam, U, grid) * luxemburg_norm(ConjugatePhi(fam), V, grid)
    rep.add(f"{name}: Hoelder |int uv| <= 2 |u|_G |v|_G*", lhs, rhs)


def lemmas(seed: int = 0, trials: int = 10_000, field_pairs: int | None = None) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("lemmas", seed)
    grid = Grid((1.0,), (33,))
    pairs = field_pairs if field_pairs is not None else max(1, trials // 10)
    for name, fam in bundled_families().items():
        _lemma_checks(rep, name, fam, rng, trials)
        _modular_norm_checks(rep, name, fam, rng, grid, trials)
        _holder_checks(rep, name, fam, rng, grid, pairs)
    return rep


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def norms(seed: int = 0, trials: int = 1000) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("norms", seed)
    grid = Grid((1.0,), (65,))
    for name, fam in bundled_families().items():
        U = np.array([random_dirichlet_field(grid, int(s), 10.0 ** rng.uniform(-2, 2), modes=6).flat
                      for s in rng.integers(0, 2 ** 31, trials)])
        lux = luxemburg_norm(fam, U, grid)
        unit = modular(fam, U / lux[:, None], grid)
        rep.add(f"{name}: modular(u/|u|) = 1 +- 1e-8", np.abs(unit - 1.0), np.full(trials, 1e-8), slack=0.0)
        am = amemiya_norm(fam, U, grid)
        rep.add(f"{name}: Luxemburg <= Amemiya", lux, am)
        rep.add(f"{name}: Amemiya <= 2 Luxemburg", am, 2.0 * lux)
        rep.add(f"{name}: Amemiya <= modular + 1", am, modular(fam, U, grid) + 1.0)
    # closed forms with G = t^2 on (0, 1)
    sq = PhiFamily.constant_power(2.0)
    fine = Grid((1.0,), (1001,))
    const = 3.0 * np.ones(fine.size)
    ramp = fine.coords.copy()
    rep.add("u = 3: Luxemburg = 3", [abs(luxemburg_norm(sq, const, fine) - 3.0)], [1e-6], slack=0.0)
    rep.add("u = x: Luxemburg = 1/sqrt(3)", [abs(luxemburg_norm(sq, ramp, fine) - 1.0 / math.sqrt(3.0))],
            [1e-6], slack=0.0)
    rep.add("u = 1: Amemiya = 2", [abs(amemiya_norm(sq, np.ones(fine.size), fine) - 2.0)], [1e-6], slack=0.0)
    rep.add("u = x: Amemiya = 2/sqrt(3)", [abs(amemiya_norm(sq, ramp, fine) - 2.0 / math.sqrt(3.0))],
            [1e-6], slack=0.0)
    return rep


# ---------------------------------------------------------------------------
# gradient consistency
# ---------------------------------------------------------------------------

def gradient_errors(fam, nl, grid: Grid, rng, trials: int, delta: float = 1e-6) -> np.ndarray:
    de = DiscreteEnergy(fam, nl, grid)
    errs = np.empty(trials)
    for k in range(trials):
        u = random_dirichlet_field(grid, int(rng.integers(2 ** 31)), float(rng.uniform(0.2, 2.0)), modes=6).flat
        v = random_dirichlet_field(grid, int(rng.integers(2 ** 31)), 1.0, modes=6).flat
        exact = de.gradient(u) @ v
        fd = (de.energy(u + delta * v) - de.energy(u - delta * v)) / (2.0 * delta)
        errs[k] = abs(exact - fd) / (1.0 + abs(exact))
    return errs


def gradient(seed: int = 0, trials: int = 100, n: int = 64) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("gradient", seed)
    grid = Grid((1.0,), (n,))
    for fname, fam in bundled_families().items():
        for nname, nl in bundled_nonlinearities().items():
            errs = gradient_errors(fam, nl, grid, rng, trials)
            rep.add(f"{fname} x {nname}: directional derivative vs central difference (< 1e-6)",
                    errs, np.full(trials, 1e-6), slack=0.0)
    return rep


# ---------------------------------------------------------------------------
# monotonicity of the flux
# ---------------------------------------------------------------------------

def _graded_nodes(t_split):
    """Quadrature on [0, 1] split at ``t_split`` with nodes clustered quadratically toward it."""
    s = 0.5 * (_GL64_X + 1.0)
    w = 0.5 * _GL64_W
    ts = t_split[:, None]
    left = ts - ts * s ** 2              # maps s in (0,1) to (0, t_split)
    right = ts + (1.0 - ts) * s ** 2
    wl = ts * 2.0 * s * w
    wr = (1.0 - ts) * 2.0 * s * w
    return np.concatenate([left, right], axis=1), np.concatenate([wl, wr], axis=1)


def monotonicity_rhs(fam, x, xi, eta) -> np.ndarray:
    """``min(1, g0-1) |xi-eta|^2 int_0^1 g(|theta_t|)/|theta_t| dt`` with ``theta_t = eta + t (xi - eta)``.

    The t-integral uses 64 Gauss-Legendre nodes on each side of the point of
    the segment closest to the origin, graded toward it, so no node lands on
    ``theta_t = 0``.
    """
    d = xi - eta
    dd = np.sum(d * d, axis=-1)
    t_split = np.clip(-np.sum(eta * d, axis=-1) / np.maximum(dd, 1e-300), 0.0, 1.0)
    T, W = _graded_nodes(t_split)
    theta = eta[:, None, :] + T[..., None] * d[:, None, :]
    r = np.sqrt(np.sum(theta ** 2, axis=-1))
    xe = x[:, None] if np.ndim(x) == 1 else x[:, None, :]
    integral = np.sum(W * fam.density(xe, r) / r, axis=-1)
    return min(1.0, fam.g0 - 1.0) * dd * integral


def split_constants(fam) -> tuple[float, float]:
    """Pointwise constants of the two-region lower bound on the monotonicity pairing.

    On ``|xi-eta| <= 2|xi|`` the pairing dominates ``c1 g(|xi|)/|xi| |xi-eta|^2``;
    elsewhere it dominates ``c2 G(|xi-eta|)``.  Both follow from restricting the
    t-integral to a quarter interval where ``|theta_t|`` is comparable to
    ``|xi|`` (resp. ``|xi-eta|``) and from the (SC) growth of ``g(t)/t``.
    """
    g0, gs = fam.g0, fam.g_sup
    base = min(1.0, g0 - 1.0) / 4.0 * min(1.0, 3.0 ** (g0 - 2.0))
    return base * min(1.0, 2.0 ** (2.0 - gs)), base * min(1.0, 4.0 ** (2.0 - gs)) * g0


def monotonicity(seed: int = 0, trials: int = 10_000, vdim: int = 2) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("monotonicity", seed)
    for name, fam in bundled_families().items():
        x = _xs(rng, fam, trials)
        scale_xi = _log_uniform(rng, trials, 1e-2, 1e2)[:, None]
        scale_eta = _log_uniform(rng, trials, 1e-2, 1e2)[:, None]
        xi = rng.normal(size=(trials, vdim)) * scale_xi
        eta = rng.normal(size=(trials, vdim)) * scale_eta
        # a quarter of the pairs are nearly collinear through the origin, the tight case
        q = trials // 4
        eta[:q] = -xi[:q] * _log_uniform(rng, q, 1e-2, 1e2)[:, None] + 1e-6 * rng.normal(size=(q, vdim))
        pairing = np.sum((flux(fam, x, xi) - flux(fam, x, eta)) * (xi - eta), axis=-1)
        rep.add(f"{name}: pairing >= min(1, g0-1)|xi-eta|^2 int g/|theta|",
                monotonicity_rhs(fam, x, xi, eta), pairing)
        c1, c2 = split_constants(fam)
        dn = np.sqrt(np.sum((xi - eta) ** 2, axis=-1))
        xn = np.sqrt(np.sum(xi ** 2, axis=-1))
        near = dn <= 2.0 * xn
        rhs = np.where(near, c1 * fam.density(x, xn) / xn * dn ** 2, c2 * fam.value(x, dn))
        rep.add(f"{name}: two-region lower bound (c1={c1:.3g}, c2={c2:.3g})", rhs, pairing)
    return rep


# ---------------------------------------------------------------------------
# geometry and oracle
# ---------------------------------------------------------------------------

def oracle_problem(n: int = 401):
    """``-u'' = u^3`` on (0, 1): ``G = t^2/2``, ``f = t^3``."""
    return PhiFamily.constant_power(2.0, scale=0.5), Nonlinearity.pure_power(4.0, theta=4.0, t0=1.0), \
        Grid((1.0,), (n,))


def geometry(seed: int = 0, trials: int = 100) -> SuiteReport:
    rep = SuiteReport("geometry", seed)
    fam, nl, grid = oracle_problem()
    cfg = MountainPassConfig(seed=seed, n_directions=trials)
    geo = probe_geometry(fam, nl, grid, cfg)
    rep.flag("rim: eta in (0, 1)", 0 < geo.eta < 1, note=f"eta = {geo.eta:g}")
    rep.flag("rim: r > 0 with all directions positive", geo.r > 0 and geo.rim_positive == geo.rim_total,
             samples=geo.rim_total, note=f"r = {geo.r:.6g}, {geo.rim_positive}/{geo.rim_total}")
    rep.flag("valley: J(t phi) < 0 beyond the rim", geo.u1_energy < 0 and geo.u1_norm > geo.eta,
             note=f"t_neg = {geo.t_neg:g}, J = {geo.u1_energy:.6g}")
    try:
        probe_geometry(fam, Nonlinearity.pure_power(4.0, coeff=0.0), grid, cfg)
        rep.flag("f = 0 reports geometry failure", False)
    except GeometryError as e:
        rep.flag("f = 0 reports geometry failure", True, note=f"failed probe {e.probe}")
    return rep


def oracle(seed: int = 0, n: int = 401, tol: float = 1e-8) -> SuiteReport:
    rep = SuiteReport("oracle", seed)
    fam, nl, grid = oracle_problem(n)
    ref = shooting_oracle(2.0, 4.0, grid)
    res = solve(fam, nl, grid, MountainPassConfig(tol=tol, seed=seed))
    de = DiscreteEnergy(fam, nl, grid)
    j_ref = float(de.energy(ref.flat))
    sup_err = float(np.max(np.abs(res.u_star.values - ref.values)) / np.max(np.abs(ref.values)))
    beta_err = abs(res.beta - j_ref) / abs(res.beta)
    J = np.array([h["J_max"] for h in res.history])
    rep.flag("solver converged", res.converged, note=f"status {res.status}, residual {res.residual:.3g}")
    rep.flag("sup-norm error vs shooting < 1e-3", sup_err < 1e-3, worst=sup_err)
    rep.flag("|beta - J(oracle)|/beta < 1e-3", beta_err < 1e-3, worst=beta_err)
    rep.flag("max-J history non-increasing", bool(np.all(np.diff(J) <= 0)), samples=len(J))
    return rep


SUITES = {"lemmas": lemmas, "norms": norms, "gradient": gradient,
          "monotonicity": monotonicity, "geometry": geometry, "oracle": oracle}

_TRIALS_ARG = {"lemmas": "trials", "norms": "trials", "gradient": "trials",
               "monotonicity": "trials", "geometry": "trials"}


def run_suite(name: str, seed: int = 0, trials: int | None = None) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(name)
    kwargs = {"seed": seed}
    if trials is not None and name in _TRIALS_ARG:
        kwargs[_TRIALS_ARG[name]] = trials
    t = time.perf_counter()
    rep = SUITES[name](**kwargs)
    rep.seconds = time.perf_counter() - t
    return rep
