"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in
the terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import sys
import time
import warnings

import numpy as np
import pytest

from mopass.discretization import Grid
from mopass.mountain_pass import MountainPassConfig, solve
from mopass.phi_core import PhiFamily, build_companion, estimate_sc_constants
from mopass.problem import Nonlinearity
from mopass.reports import HypothesisWarning
from mopass.suites import run_suite

RESULTS: dict[int, str] = {}


def companion_closed_form():
    """Built companion of t^(2+x) with alpha=0.1 vs t^(p/(1-alpha p)) on a 50x50 grid, < 5 s."""
    t0 = time.perf_counter()
    alpha = 0.1
    fam = PhiFamily.variable_exponent((2.0, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        psi = build_companion(fam, alpha, N=1, override=True)
    x = np.linspace(0.0, 1.0, 50)[:, None]
    t = np.logspace(-3.0, 3.0, 50)[None, :]
    p = 2.0 + x
    err = float(np.max(np.abs(psi.value(x, t) / t ** (p / (1 - alpha * p)) - 1.0)))
    secs = time.perf_counter() - t0
    return err < 1e-8 and secs < 5.0, f"max rel error {err:.2e}, {secs:.2f} s"


def sc_estimation():
    """(p,p) exact, (p-,p+) within 1e-6, double phase (p,q) within 1e-3 sampled."""
    cp = estimate_sc_constants(PhiFamily.constant_power(2.5))
    cp_s = estimate_sc_constants(PhiFamily.constant_power(2.5), method="sampled")
    ve = estimate_sc_constants(PhiFamily.variable_exponent((1.5, 1.0)), method="sampled")
    dp = estimate_sc_constants(PhiFamily.double_phase(2.0, 3.0, (0.0, 1.0)), method="sampled")
    ok = (cp == (2.5, 2.5) and max(abs(cp_s[0] - 2.5), abs(cp_s[1] - 2.5)) < 1e-12
          and abs(ve[0] - 1.5) < 1e-6 and abs(ve[1] - 2.5) < 1e-6
          and abs(dp[0] - 2.0) < 1e-3 and abs(dp[1] - 3.0) < 1e-3)
    return ok, f"power {cp}, variable {ve[0]:.9g}..{ve[1]:.9g}, double phase {dp[0]:.6g}..{dp[1]:.6g}"


def _suite(name, limit=None, **kw):
    rep = run_suite(name, **kw)
    ok = rep.passed and (limit is None or rep.seconds < limit)
    samples = sum(c.samples for c in rep.checks)
    return ok, (f"{len(rep.checks)} checks, {samples} samples, {rep.total_violations} violations, "
                f"{rep.seconds:.1f} s")


def lemma_suite():
    return _suite("lemmas", 60.0, seed=0, trials=10_000)


def norm_machinery():
    return _suite("norms", seed=0, trials=1000)


def gradient_consistency():
    return _suite("gradient", 30.0, seed=0, trials=100)


def monotonicity_chain():
    return _suite("monotonicity", seed=0, trials=10_000)


def oracle_equivalence():
    rep = run_suite("oracle", seed=0)
    notes = "; ".join(c.note or f"{c.name}: {c.worst:.2e}" for c in rep.checks if c.note or np.isfinite(c.worst))
    return rep.passed and rep.seconds < 60.0, f"{notes}; {rep.seconds:.1f} s"


def geometry_reproduction():
    rep = run_suite("geometry", seed=0, trials=100)
    return rep.passed, "; ".join(c.note for c in rep.checks)


def variable_exponent_2d():
    t0 = time.perf_counter()
    fam = PhiFamily.variable_exponent((1.8, 0.2), extent=(1.0, 1.0))
    nl = Nonlinearity.pure_power(3.6, theta=3.6, dim=2)
    res = solve(fam, nl, Grid((1.0, 1.0), (33, 33)), MountainPassConfig(tol=1e-6))
    secs = time.perf_counter() - t0
    ok = res.status == "converged" and res.residual < 1e-6 and res.beta > 0 and secs < 300.0
    return ok, (f"status {res.status}, residual {res.residual:.2e}, beta {res.beta:.6g}, "
                f"|grad u|_G {res.grad_norm:.4g} > eta/2 = {res.geometry.eta / 2:g}, {secs:.1f} s")


CRITERIA = {
    1: ("companion construction", companion_closed_form),
    2: ("SC estimation", sc_estimation),
    3: ("lemma suite", lemma_suite),
    4: ("norm machinery", norm_machinery),
    5: ("gradient consistency", gradient_consistency),
    6: ("monotonicity chain", monotonicity_chain),
    7: ("oracle equivalence", oracle_equivalence),
    8: ("geometry reproduction", geometry_reproduction),
    9: ("2D variable-exponent smoke", variable_exponent_2d),
}


def evaluate(k: int) -> tuple[bool, str]:
    title, fn = CRITERIA[k]
    try:
        ok, detail = fn()
    except Exception as exc:      # a crash is a failed criterion, reported like any other
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k} ({title}): {detail}"
    RESULTS[k] = line
    print(line)
    return ok, line


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    ok, line = evaluate(k)
    assert ok, line


if __name__ == "__main__":
    outcomes = [evaluate(k)[0] for k in sorted(CRITERIA)]
    print(f"{sum(outcomes)}/{len(outcomes)} acceptance criteria passed")
    sys.exit(0 if all(outcomes) else 1)
