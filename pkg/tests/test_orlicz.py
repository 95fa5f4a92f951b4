import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mopass.discretization import Field, Grid, grad, random_dirichlet_field
from mopass.orlicz_space import (amemiya_norm, embedding_check, holder_check, luxemburg_norm, modular,
                                 norm_report, poincare_ratio)
from mopass.phi_core import PhiFamily
from mopass.reports import InputError

square = PhiFamily.constant_power(2.0)
line = Grid((1.0,), (101,))
fine = Grid((1.0,), (1001,))
FAMILIES = [PhiFamily.constant_power(2.5), PhiFamily.variable_exponent((1.5, 1.0)),
            PhiFamily.double_phase(2.0, 3.0, (0.0, 1.0))]


def ramp(grid):
    return Field(grid.coords.copy(), grid)


def test_modular_closed_forms():
    assert modular(square, Field(np.ones(101), line)) == pytest.approx(1.0, abs=1e-10)
    # trapezoid error for x^2 is h^2/6
    assert modular(square, ramp(line)) == pytest.approx(1 / 3, abs=0.01 ** 2 / 6 + 1e-14)
    assert modular(square, line.zeros()) == 0.0


@pytest.mark.parametrize("p, c", [(2.0, 3.0), (3.5, 0.2), (1.3, 7.0)])
def test_luxemburg_of_constant_is_constant(p, c):
    fam = PhiFamily.constant_power(p)
    assert luxemburg_norm(fam, Field(np.full(101, c), line)) == pytest.approx(c, rel=1e-12)


def test_luxemburg_and_amemiya_of_ramp():
    assert luxemburg_norm(square, ramp(fine)) == pytest.approx(1 / math.sqrt(3), abs=1e-6)
    assert amemiya_norm(square, ramp(fine)) == pytest.approx(2 / math.sqrt(3), abs=1e-6)
    assert amemiya_norm(square, Field(np.ones(1001), fine)) == pytest.approx(2.0, abs=1e-10)


def test_zero_field_norms():
    assert luxemburg_norm(square, line.zeros()) == 0.0
    assert amemiya_norm(square, line.zeros()) == 0.0


def test_grid_mismatch_rejected():
    with pytest.raises(InputError):
        modular(square, ramp(line), fine)
    with pytest.raises(InputError):
        luxemburg_norm(square, np.ones(7), line)


def test_batch_norms_match_single():
    U = np.array([random_dirichlet_field(line, s, 3.0).flat for s in range(5)])
    fam = FAMILIES[2]
    batch = luxemburg_norm(fam, U, line)
    single = [luxemburg_norm(fam, Field(u, line)) for u in U]
    np.testing.assert_array_equal(batch, single)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 2), seed=st.integers(0, 2 ** 31 - 1), lamp=st.floats(-3, 3))
def test_unit_modular_and_norm_ordering(k, seed, lamp):
    fam = FAMILIES[k]
    u = random_dirichlet_field(line, seed, 10.0 ** lamp, modes=5)
    lux = luxemburg_norm(fam, u)
    assert modular(fam, u / lux) == pytest.approx(1.0, abs=1e-8)
    am = amemiya_norm(fam, u)
    assert lux <= am * (1 + 1e-10)
    assert am <= 2 * lux * (1 + 1e-10)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 2), seed=st.integers(0, 2 ** 31 - 1), c=st.floats(0.01, 100.0))
def test_luxemburg_is_homogeneous(k, seed, c):
    fam = FAMILIES[k]
    u = random_dirichlet_field(line, seed, 1.0, modes=5)
    assert luxemburg_norm(fam, u * c) == pytest.approx(c * luxemburg_norm(fam, u), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 2), s1=st.integers(0, 2 ** 31 - 1), s2=st.integers(0, 2 ** 31 - 1))
def test_luxemburg_triangle_inequality(k, s1, s2):
    fam = FAMILIES[k]
    u, v = random_dirichlet_field(line, s1, 2.0), random_dirichlet_field(line, s2, 5.0)
    assert luxemburg_norm(fam, u + v) <= (luxemburg_norm(fam, u) + luxemburg_norm(fam, v)) * (1 + 1e-12)


def test_scaling_sequences_go_to_zero_and_infinity_together():
    fam = FAMILIES[1]
    u = random_dirichlet_field(line, 11, 1.0, modes=4)
    small = [(luxemburg_norm(fam, u / i), modular(fam, u / i)) for i in (10, 1e3, 1e6)]
    big = [(luxemburg_norm(fam, u * i), modular(fam, u * i)) for i in (10, 1e3, 1e6)]
    assert small[-1][0] < 1e-5 and small[-1][1] < 1e-5
    assert big[-1][0] > 1e5 and big[-1][1] > 1e5
    assert all(a[0] > b[0] and a[1] > b[1] for a, b in zip(small, small[1:]))


def test_norm_report_fields():
    rep = norm_report(square, ramp(fine), field_id="ramp")
    assert rep.to_dict()["field_id"] == "ramp"
    assert rep.luxemburg <= rep.amemiya <= 2 * rep.luxemburg


def test_holder_examples():
    one = Field(np.ones(101), line)
    assert holder_check(square, line.zeros(), one).constant == 0.0
    rep = holder_check(square, one, one)
    assert rep.passed and rep.constant <= 1.0


@pytest.mark.parametrize("fam", FAMILIES)
def test_holder_random_pairs(fam):
    for s in range(40):
        u = random_dirichlet_field(line, s, 10.0 ** (s % 5 - 2))
        v = random_dirichlet_field(line, 1000 + s, 10.0 ** (s % 3 - 1))
        assert holder_check(fam, u, v).passed


def test_embedding_examples():
    cube, sq = PhiFamily.constant_power(3.0), PhiFamily.constant_power(2.0)
    rep = embedding_check(cube, sq)
    assert rep.passed and math.isfinite(rep.constant) and rep.constant <= 1.0
    assert not embedding_check(sq, cube).passed
    same = embedding_check(sq, sq)
    assert same.passed and same.constant == pytest.approx(1.0, abs=1e-10)


def test_poincare_ratio_bounded():
    grid = Grid((1.0,), (65,))
    rep = poincare_ratio(square, grid, trials=50)
    # for G = t^2 in 1D the optimal constant is 1/pi
    assert rep.passed and rep.constant <= 1 / math.pi + 1e-3


def test_node_and_cell_views_agree_on_grad():
    u = random_dirichlet_field(line, 4, 2.0)
    g = grad(u)
    assert luxemburg_norm(square, g) == luxemburg_norm(square, g.magnitude, line, at="cells")
