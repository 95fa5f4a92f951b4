import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mopass.phi_core import (CompanionPsi, ConjugatePhi, PhiFamily, SampleSpec, build_companion, check_a0,
                             check_a1, check_alpha_window, check_sc, check_standing_assumption, conjugate_at,
                             density_inverse, estimate_sc_constants, phi_density, phi_eval, phi_inverse)
from mopass.reports import HypothesisError, HypothesisWarning, InputError

power2 = PhiFamily.constant_power(2.0)
pvar = PhiFamily.variable_exponent((2.0, 1.0))
dphase_x = PhiFamily.double_phase(2.0, 3.0, (0.0, 1.0))
dphase_1 = PhiFamily.double_phase(2.0, 3.0, 1.0)

FAMILIES = {
    "constant_power": PhiFamily.constant_power(2.5),
    "variable_exponent": PhiFamily.variable_exponent((1.5, 1.0)),
    "double_phase": dphase_x,
    "tabulated": PhiFamily.tabulated(lambda t: t + t ** 2),
    "scaled_2d": PhiFamily.variable_exponent((1.8, 0.2, 0.1), extent=(1.0, 2.0), scale=0.5),
}


def _x(fam, u):
    """Map u in [0,1] (scalar) to a point of the family's box."""
    return u * fam.extent[0] if fam.dim == 1 else np.array([u * fam.extent[0], (1 - u) * fam.extent[1]])


# -- worked values ----------------------------------------------------------

@pytest.mark.parametrize("fam, x, t, expected", [
    (power2, 0.3, 3.0, 9.0),
    (pvar, 0.5, 2.0, 2.0 ** 2.5),
    (dphase_x, 1.0, 2.0, 12.0),
])
def test_phi_eval_examples(fam, x, t, expected):
    assert phi_eval(fam, x, t) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("fam, t, expected", [
    (PhiFamily.constant_power(3.0), 2.0, 12.0),
    (dphase_1, 1.0, 5.0),
])
def test_phi_density_examples(fam, t, expected):
    assert phi_density(fam, 0.5, t) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_density_vanishes_at_zero(name):
    fam = FAMILIES[name]
    assert float(phi_density(fam, _x(fam, 0.4), 0.0)) == 0.0
    assert float(phi_eval(fam, _x(fam, 0.4), 0.0)) == 0.0


@pytest.mark.parametrize("fam, x, s, expected", [
    (power2, 0.2, 4.0, 2.0),
    (pvar, 1.0, 8.0, 2.0),
    (dphase_1, 0.5, 12.0, 2.0),
])
def test_phi_inverse_examples(fam, x, s, expected):
    assert phi_inverse(fam, x, s) == pytest.approx(expected, rel=1e-10)


def test_conjugate_examples():
    half_square = PhiFamily.tabulated(lambda t: t)
    assert conjugate_at(half_square, 0.5, 3.0) == pytest.approx(4.5, rel=1e-9)
    assert conjugate_at(power2, 0.5, 2.0) == pytest.approx(1.0, rel=1e-12)
    assert conjugate_at(dphase_1, 0.5, 5.0) == pytest.approx(3.0, rel=1e-10)


def test_conjugate_matches_dense_supremum():
    t = np.linspace(0.0, 5.0, 2_000_001)
    brute = np.max(5.0 * t - (t ** 2 + t ** 3))
    assert conjugate_at(dphase_1, 0.5, 5.0) == pytest.approx(brute, rel=1e-9)


def test_domain_violations_raise():
    with pytest.raises(InputError):
        phi_eval(power2, 0.5, -1.0)
    with pytest.raises(InputError):
        phi_eval(power2, 1.5, 1.0)
    with pytest.raises(InputError):
        phi_inverse(power2, 0.5, -2.0)


def test_invalid_families_rejected():
    with pytest.raises(ValueError):
        PhiFamily.constant_power(1.0)
    with pytest.raises(ValueError):
        PhiFamily.variable_exponent((0.9, 0.5))
    with pytest.raises(ValueError):
        PhiFamily.double_phase(3.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        PhiFamily.double_phase(2.0, 3.0, (-0.5, 1.0))


# -- SC constants -------------------------------------------------------------

def test_sc_constant_power_exact():
    assert estimate_sc_constants(PhiFamily.constant_power(2.5)) == (2.5, 2.5)
    assert estimate_sc_constants(PhiFamily.constant_power(2.5), method="sampled") == pytest.approx((2.5, 2.5),
                                                                                                   abs=1e-12)


def test_sc_variable_exponent_range():
    fam = PhiFamily.variable_exponent((1.5, 1.0))
    g0, gs = estimate_sc_constants(fam, method="sampled")
    assert abs(g0 - 1.5) < 1e-6 and abs(gs - 2.5) < 1e-6


def test_sc_double_phase_sampled():
    g0, gs = estimate_sc_constants(dphase_x, method="sampled")
    assert abs(g0 - 2.0) < 1e-3 and abs(gs - 3.0) < 1e-3


def test_sc_double_phase_zero_weight_is_power():
    fam = PhiFamily.double_phase(2.0, 3.0, 0.0)
    assert (fam.g0, fam.g_sup) == (2.0, 2.0)


def test_sc_tabulated_sampled():
    fam = FAMILIES["tabulated"]   # g = t + t^2: t g'/g + 1 ranges over (2, 3)
    assert fam.g0 == pytest.approx(2.0, abs=1e-5)
    assert fam.g_sup == pytest.approx(3.0, abs=1e-5)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_check_sc_passes_on_valid_families(name):
    rep = check_sc(FAMILIES[name], SampleSpec(n_x=9, n_t=121))
    assert rep.passed, rep.message


# -- sampled properties -------------------------------------------------------

unit = st.floats(0.0, 1.0)
logt = st.floats(-6.0, 6.0)


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(sorted(FAMILIES)), u=unit, lt=logt)
def test_inverse_roundtrip(name, u, lt):
    fam = FAMILIES[name]
    x, t = _x(fam, u), 10.0 ** lt
    s = fam.value(x, t)
    assert fam.inverse(x, s) == pytest.approx(t, rel=1e-9)
    assert fam.density_inverse(x, fam.density(x, t)) == pytest.approx(t, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(sorted(FAMILIES)), u=unit, lt=logt)
def test_growth_ratio_between_sc_constants(name, u, lt):
    fam = FAMILIES[name]
    x, t = _x(fam, u), 10.0 ** lt
    ratio = t * fam.density(x, t) / fam.value(x, t)
    assert fam.g0 * (1 - 1e-10) <= ratio <= fam.g_sup * (1 + 1e-10)


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(sorted(FAMILIES)), u=unit, lt=logt, ls=logt)
def test_young_inequality(name, u, lt, ls):
    fam = FAMILIES[name]
    x, t, s = _x(fam, u), 10.0 ** lt, 10.0 ** ls
    rhs = fam.value(x, t) + fam.conjugate(x, s)
    assert s * t <= rhs + 1e-10 * max(1.0, rhs)


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(sorted(FAMILIES)), u=unit, ls=st.floats(-4.0, 4.0))
def test_conjugate_ratio_bounds(name, u, ls):
    fam = FAMILIES[name]
    x, s = _x(fam, u), 10.0 ** ls
    r = s * fam.density_inverse(x, s) / fam.conjugate(x, s)
    gs, g0 = fam.g_sup, fam.g0
    assert gs / (gs - 1) * (1 - 1e-9) <= r <= g0 / (g0 - 1) * (1 + 1e-9)


def test_printed_conjugate_upper_bound_fails_for_squares():
    # for G = t^2 the ratio s g^-1(s) / G*(s) is exactly 2, above (g+1)/g = 1.5
    r = 3.0 * density_inverse(power2, 0.5, 3.0) / conjugate_at(power2, 0.5, 3.0)
    assert r == pytest.approx(2.0, rel=1e-12)
    assert r > (power2.g0 + 1) / power2.g0


def test_conjugate_phi_is_a_phi_function():
    conj = ConjugatePhi(dphase_x)
    s = np.logspace(-3, 3, 50)
    vals = conj.value(0.7, s)
    assert np.all(np.diff(vals) > 0)
    assert conj.g0 == pytest.approx(1.5) and conj.g_sup == pytest.approx(2.0)


# -- companion ---------------------------------------------------------------

def test_companion_constant_power_closed_form():
    psi = build_companion(power2, 0.1, N=1, override=True)
    assert psi.value(0.5, 2.0) == pytest.approx(2.0 ** 2.5, rel=1e-8)


def test_companion_sub_unit_power():
    fam = PhiFamily.constant_power(1.8, extent=(1.0, 1.0))
    psi = build_companion(fam, 0.3, N=2)
    q = 1.8 / (1 - 0.54)
    t = np.array([0.01, 0.5, 2.0, 50.0])
    np.testing.assert_allclose(psi.value(np.array([0.5, 0.5]), t), t ** q, rtol=1e-10)


def test_companion_alpha_zero_is_identity():
    with pytest.warns(HypothesisWarning):
        psi = build_companion(pvar, 0.0, N=1, override=True)
    x, t = np.linspace(0, 1, 7)[:, None], np.logspace(-2, 2, 9)[None, :]
    np.testing.assert_array_equal(psi.value(x, t), pvar.value(x, t))


def test_companion_variable_exponent_closed_form():
    alpha = 0.1
    with pytest.warns(HypothesisWarning):
        psi = build_companion(pvar, alpha, N=1, override=True)
    x, t = np.linspace(0, 1, 20)[:, None], np.logspace(-3, 3, 20)[None, :]
    p = 2 + x
    np.testing.assert_allclose(psi.value(x, t), t ** (p / (1 - alpha * p)), rtol=1e-8)


def test_companion_density_is_derivative():
    psi = build_companion(power2, 0.1, N=1, override=True)
    t = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(psi.density(0.3, t), 2.5 * t ** 1.5, rtol=1e-6)


def test_companion_window_errors():
    fam = PhiFamily.constant_power(1.5, extent=(1.0, 1.0))
    with pytest.raises(HypothesisError) as err:
        build_companion(fam, 0.6, N=2)
    assert err.value.bound == "alpha_upper"
    with pytest.raises(HypothesisError) as err:
        build_companion(PhiFamily.constant_power(2.0), 0.6, N=1, override=True)
    assert err.value.bound == "alpha_psi_defined"
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert isinstance(build_companion(fam, 0.2, N=2), CompanionPsi)


def test_companion_growth_constants():
    psi = build_companion(PhiFamily.variable_exponent((1.5, 0.3), extent=(1.0, 1.0)), 0.2, N=2)
    assert psi.psi_g0 == pytest.approx(1 / (1 / 1.5 - 0.2))
    assert psi.psi_gsup == pytest.approx(1 / (1 / 1.8 - 0.2))


# -- checkers ----------------------------------------------------------------

def test_alpha_window_and_standing_assumption():
    fam = PhiFamily.constant_power(1.5, extent=(1.0, 1.0))
    assert check_alpha_window(fam, 0.25, 2).passed
    assert not check_alpha_window(fam, 0.5, 2).passed
    assert check_standing_assumption(fam, 2).passed
    assert not check_standing_assumption(power2, 1).passed


def test_a0_bounds():
    rep = check_a0(dphase_x)
    assert rep.passed and rep.constant == pytest.approx(5.0)


def test_a1_x_independent_is_one():
    assert check_a1(PhiFamily.constant_power(2.5)).constant == 1.0
    assert check_a1(PhiFamily.double_phase(2.0, 3.0, 0.0)).constant == 1.0


def test_a1_log_holder_exponent_is_stable():
    fam = PhiFamily.variable_exponent((2.0, 0.5))
    a = check_a1(fam, trials=10_000, rng_seed=3)
    b = check_a1(fam, trials=10_000, rng_seed=3)
    c = check_a1(fam, trials=20_000, rng_seed=3)
    assert a.passed and math.isfinite(a.constant)
    assert a.constant == b.constant
    assert abs(c.constant - a.constant) <= 0.1 * a.constant
    assert "no violation found" in a.message
