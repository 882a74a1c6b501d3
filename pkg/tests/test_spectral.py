import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlch.errors import InvalidArgument
from nlch.spectral import (barycentric_interp, cheb_grid, clenshaw_curtis_weights,
                           interp_matrix_1d, square_grid, tensor_grid, tensor_grid_3d)


def test_cgl_nodes_ascending_and_symmetric():
    g = cheb_grid(9)
    assert g.points[0] == 0.0 and g.points[-1] == 1.0
    assert np.all(np.diff(g.points) > 0)
    assert g.points[4] == 0.5
    np.testing.assert_allclose(g.points + g.points[::-1], 1.0, atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 8, 9, 21])
def test_clenshaw_curtis_exact_on_polynomials(n):
    w = clenshaw_curtis_weights(n)
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    for k in range(n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(w @ x**k - exact) < 1e-13


def test_weights_on_interval_sum_to_length():
    g = cheb_grid(12, -1.0, 2.0)
    assert abs(g.weights.sum() - 3.0) < 1e-14


def test_diff_matrix_exact_on_polynomials():
    g = cheb_grid(10, 0.0, 2.0)
    x = g.points
    np.testing.assert_allclose(g.diff @ x**5, 5 * x**4, atol=1e-10)
    np.testing.assert_allclose(g.diff @ np.ones_like(x), 0.0, atol=1e-12)


def test_tensor_grid_row_major_and_laplacian():
    g = square_grid(8)
    p = g.points
    assert p[1, 0] > p[0, 0] and p[1, 1] == p[0, 1]
    assert p[8, 1] > p[0, 1]
    f = p[:, 0] ** 3 + p[:, 0] * p[:, 1] ** 2
    np.testing.assert_allclose(g.Lap @ f, 6 * p[:, 0] + 2 * p[:, 0], atol=1e-9)
    assert abs(g.integrate(p[:, 0] ** 2 * p[:, 1]) - 1 / 6) < 1e-14


def test_boundary_normals_and_corners():
    g = square_grid(6)
    assert len(g.boundary_index) == 4 * 5
    corner = list(g.boundary_index).index(0)
    np.testing.assert_array_equal(g.boundary_normal[corner], [-1.0, -1.0])
    assert g.interior_mask.sum() == 16


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20))
def test_interp_rows_partition_unity(ts):
    P = interp_matrix_1d(cheb_grid(11), ts)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)


def test_interp_hits_nodes_exactly():
    g = cheb_grid(7)
    P = interp_matrix_1d(g, g.points)
    np.testing.assert_array_equal(P, np.eye(7))


def test_barycentric_interp_exact_for_tensor_polynomials(rng):
    g = square_grid(7)
    f = lambda p: p[:, 0] ** 4 * p[:, 1] ** 2 - p[:, 1] ** 6
    T = rng.uniform(0, 1, (30, 2))
    np.testing.assert_allclose(barycentric_interp(g, T) @ f(g.points), f(T), atol=1e-13)


def test_grid_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        cheb_grid(1)
    with pytest.raises(InvalidArgument):
        cheb_grid(5, 1.0, 0.0)
    with pytest.raises(InvalidArgument):
        interp_matrix_1d(cheb_grid(5), [np.nan])


def test_grid3d_weights_and_size():
    g = tensor_grid_3d(cheb_grid(5, -1, 1))
    assert g.M == 125
    assert abs(g.weights.sum() - 8.0) < 1e-13
    assert g.min_spacing == pytest.approx(1 - np.cos(np.pi / 4))


def test_rectangular_tensor_grid():
    g = tensor_grid(cheb_grid(4), cheb_grid(6, 0, 2))
    assert g.M == 24 and g.nx == 4 and g.ny == 6
    assert abs(g.weights.sum() - 2.0) < 1e-14
