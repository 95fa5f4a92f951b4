import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mopass.discretization import (Field, Grid, grad, neg_laplacian, quad_cells, quad_nodes,
                                   random_dirichlet_field, stiffness_matrix)
from mopass.reports import InputError

SCHEMES_2D = ["p1", "q1c"]


def test_grid_basics():
    g = Grid((2.0, 1.0), (5, 3))
    assert g.dim == 2 and g.shape == (5, 3) and g.size == 15
    assert g.h == (0.5, 0.5) and g.measure == 2.0
    assert g.boundary_mask.sum() == 15 - 3
    assert len(g.interior) == 3
    assert Grid((1.0, 1.0), 9).n == (9, 9)


@pytest.mark.parametrize("args", [((1.0,), (2,)), ((0.0,), (9,)), ((1.0, 1.0, 1.0), (9,)),
                                  ((1.0, 1.0), (9, 9), "q2")])
def test_grid_rejects_bad_input(args):
    with pytest.raises(InputError):
        Grid(*args)


def test_grad_of_linear_is_exact():
    g = Grid((1.0,), (11,))
    np.testing.assert_allclose(grad(Field(g.coords.copy(), g)).values[:, 0], 1.0, rtol=1e-13)
    assert np.all(grad(g.zeros()).values == 0.0)


@pytest.mark.parametrize("scheme", SCHEMES_2D)
def test_grad_of_affine_2d_is_exact(scheme):
    g = Grid((1.0, 2.0), (9, 13), scheme)
    X = g.coords
    u = Field(3.0 * X[..., 0] - 2.0 * X[..., 1] + 1.0, g)
    vals = grad(u).values
    np.testing.assert_allclose(vals[:, 0], 3.0, rtol=1e-12)
    np.testing.assert_allclose(vals[:, 1], -2.0, rtol=1e-12)


def test_grad_of_square_at_midpoint():
    g = Grid((1.0,), (101,))
    vals = grad(Field(g.coords ** 2, g)).values[:, 0]
    mid = g.cell_points
    k = int(np.argmin(np.abs(mid - 0.5)))
    assert abs(vals[k] - 2 * mid[k]) < 1e-12          # centered difference is exact for x^2 at midpoints
    assert abs(vals[k] - 1.0) <= g.h[0]


def test_quadrature_rules():
    g = Grid((1.0,), (101,))
    assert quad_nodes(np.ones(101), g) == pytest.approx(1.0, abs=1e-14)
    assert quad_nodes(g.coords, g) == pytest.approx(0.5, abs=1e-12)
    assert quad_cells(g.cell_points ** 2, g) == pytest.approx(1 / 3, abs=g.h[0] ** 2 / 12 + 1e-14)
    g2 = Grid((1.0, 3.0), (9, 9))
    assert quad_cells(np.ones(g2.n_cells), g2) == pytest.approx(3.0, rel=1e-14)
    assert quad_nodes(np.ones(g2.shape), g2) == pytest.approx(3.0, rel=1e-14)


@pytest.mark.parametrize("scheme", SCHEMES_2D)
def test_cell_rule_exact_for_affine(scheme):
    g = Grid((1.0, 1.0), (9, 9), scheme)
    P = g.cell_points
    assert quad_cells(P[:, 0] + 2 * P[:, 1], g) == pytest.approx(1.5, rel=1e-13)


def test_random_fields():
    g = Grid((1.0, 1.0), (17, 17))
    a, b = random_dirichlet_field(g, 7), random_dirichlet_field(g, 7)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.is_dirichlet()
    assert np.all(random_dirichlet_field(g, 7, amplitude=0.0).values == 0.0)
    smooth = random_dirichlet_field(g, 3, amplitude=2.0, modes=4)
    assert smooth.is_dirichlet() and np.max(np.abs(smooth.values)) <= 2.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), seed2=st.integers(0, 2 ** 31 - 1), scheme=st.sampled_from(SCHEMES_2D))
def test_summation_by_parts(seed, seed2, scheme):
    """sum_cells w grad u . grad v equals sum_nodes w (-Delta u) v for Dirichlet v."""
    g = Grid((1.0, 1.5), (11, 9), scheme)
    u, v = random_dirichlet_field(g, seed), random_dirichlet_field(g, seed2)
    lhs = quad_cells(np.sum(grad(u).values * grad(v).values, axis=-1), g)
    rhs = quad_nodes(neg_laplacian(u).values * v.values, g)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_p1_stiffness_is_five_point_laplacian():
    g = Grid((1.0, 1.0), (9, 9), "p1")
    u = random_dirichlet_field(g, 5)
    U, h = u.values, g.h[0]
    fd = np.zeros_like(U)
    fd[1:-1, 1:-1] = (4 * U[1:-1, 1:-1] - U[2:, 1:-1] - U[:-2, 1:-1] - U[1:-1, 2:] - U[1:-1, :-2]) / h ** 2
    np.testing.assert_allclose(neg_laplacian(u).values, fd, rtol=1e-11, atol=1e-9)


def test_q1c_checkerboard_has_zero_gradient():
    # the averaged scheme cannot see a checkerboard; the triangle scheme can
    i, j = np.indices((9, 9))
    board = (-1.0) ** (i + j)
    assert np.max(np.abs(grad(Field(board, Grid((1.0, 1.0), 9, "q1c"))).values)) < 1e-12
    assert np.max(np.abs(grad(Field(board, Grid((1.0, 1.0), 9, "p1"))).values)) > 1.0


def test_stiffness_symmetric_positive():
    g = Grid((1.0, 1.0), (7, 7))
    K = stiffness_matrix(g).toarray()
    np.testing.assert_allclose(K, K.T, atol=1e-12)
    Ki = K[np.ix_(g.interior, g.interior)]
    assert np.min(np.linalg.eigvalsh(Ki)) > 0


def test_1d_laplacian_of_sine():
    g = Grid((1.0,), (201,))
    u = Field(np.sin(np.pi * g.coords), g)
    lap = neg_laplacian(u).values[1:-1]
    np.testing.assert_allclose(lap, np.pi ** 2 * u.values[1:-1], rtol=1e-4)


@pytest.mark.parametrize("shape", [(1.0,), (1.0, 2.0)])
def test_csv_roundtrip(tmp_path, shape):
    g = Grid(shape, (9,) * len(shape))
    u = random_dirichlet_field(g, 1, 1e-3)
    path = tmp_path / "u.csv"
    u.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == ("i,x,value" if len(shape) == 1 else "i,j,x,y,value")
    np.testing.assert_array_equal(Field.from_csv(path, g).values, u.values)


def test_field_arithmetic_checks_grid():
    g1, g2 = Grid((1.0,), (9,)), Grid((1.0,), (11,))
    u = random_dirichlet_field(g1, 0)
    assert np.all((u + u).values == 2 * u.values)
    assert np.all((-u).values == -u.values)
    with pytest.raises(InputError):
        u + g2.zeros()
    with pytest.raises(InputError):
        Field(np.zeros(5), g1)
