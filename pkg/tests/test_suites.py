import numpy as np
import pytest

from mopass.phi_core import PhiFamily
from mopass.problem import flux
from mopass.suites import SUITES, monotonicity_rhs, run_suite, split_constants, violations


def test_violation_slack_is_relative():
    assert not violations([1.0 + 5e-11], [1.0]).any()
    assert violations([1.0 + 5e-10], [1.0]).all()
    assert not violations([1e6 + 1e-5], [1e6]).any()
    assert violations([0.5], [1e-8], slack=0.0).all()


@pytest.mark.parametrize("name", sorted(SUITES))
def test_small_suites_pass(name):
    trials = {"lemmas": 500, "norms": 50, "gradient": 5, "monotonicity": 500, "geometry": 20}.get(name)
    rep = run_suite(name, seed=1, trials=trials)
    assert rep.passed, "\n".join(rep.lines())
    assert rep.to_dict()["violations"] == 0


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def _collinear_pairs(fam, n=2000, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=n)
    xi = rng.normal(size=(n, 2)) * np.exp(rng.uniform(-3, 3, n))[:, None]
    eta = -xi * np.exp(rng.uniform(-3, 3, n))[:, None]
    pairing = np.sum((flux(fam, x, xi) - flux(fam, x, eta)) * (xi - eta), axis=-1)
    return x, xi, eta, pairing


def test_lower_bound_weight_must_be_g0_minus_one():
    # for g0 < 2 the weight min(1, g0) is too large on collinear pairs; min(1, g0 - 1) is not
    fam = PhiFamily.constant_power(1.3)
    x, xi, eta, pairing = _collinear_pairs(fam)
    rhs = monotonicity_rhs(fam, x, xi, eta)
    assert not violations(rhs, pairing).any()
    assert violations(rhs / (fam.g0 - 1.0), pairing).any()


@pytest.mark.parametrize("fam", [PhiFamily.constant_power(1.3), PhiFamily.constant_power(4.0),
                                 PhiFamily.variable_exponent((1.5, 1.0))])
def test_two_region_constants(fam):
    x, xi, eta, pairing = _collinear_pairs(fam, seed=3)
    c1, c2 = split_constants(fam)
    dn = np.linalg.norm(xi - eta, axis=-1)
    xn = np.linalg.norm(xi, axis=-1)
    rhs = np.where(dn <= 2 * xn, c1 * fam.density(x, xn) / xn * dn ** 2, c2 * fam.value(x, dn))
    assert not violations(rhs, pairing).any()
