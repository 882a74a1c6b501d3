import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlch import closed_forms as cf
from nlch.domain_maps import bulged, mapped_area, polar_box_integral, pullback_operator, rectangle
from nlch.errors import InvalidArgument
from nlch.kernels import eval_kernel, mollifier, newtonian2d
from nlch.multishape import assemble_operator
from nlch.spectral import square_grid


def test_identity_rectangle_is_bitwise_square_operator():
    g = square_grid(6)
    a = pullback_operator(rectangle(0, 1, 0, 1), g, newtonian2d(), 1e-2, 2, threads=1)
    b = assemble_operator(g, newtonian2d(), 1e-2, 2, threads=1)
    np.testing.assert_array_equal(a.matrix, b.matrix)


def test_rectangle_operator_on_constant():
    g = square_grid(10)
    d = rectangle(-1, 1, -1, 1)
    op = pullback_operator(d, g, newtonian2d(), 1e-2, 4)
    y = d.forward(g.points)
    # K * 1 on the 2x2 box from four quadrant integrals
    q = cf.quadrant_integral
    ref = (q(1 + y[:, 0], 1 + y[:, 1]) + q(1 - y[:, 0], 1 + y[:, 1])
           + q(1 + y[:, 0], 1 - y[:, 1]) + q(1 - y[:, 0], 1 - y[:, 1]))
    assert np.max(np.abs(op.matrix.sum(axis=1) - ref)) < 1e-11
    assert op.meta.domain == ("rectangle", -1.0, 1.0, -1.0, 1.0)


def test_polar_box_integral_matches_closed_form():
    unit = newtonian2d()
    for xi in ([0.5, 0.5], [0.0, 0.3], [1.0, 1.0]):
        xi = np.array(xi)
        l, r = max(0, xi[0] - 0.05), min(1, xi[0] + 0.05)
        b, t = max(0, xi[1] - 0.05), min(1, xi[1] + 0.05)
        v = polar_box_integral(lambda Y: eval_kernel(unit, xi - Y), xi, (l, r, b, t))
        assert v == pytest.approx(cf.G_eps_square(xi, 0.05), abs=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.49), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_bulged_det_lower_bound(k, x1, x2):
    det = bulged(k).jac_det(np.array([x1, x2]))
    assert det >= 4 * (1 - 4 * k * k) - 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.49, 0.49), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_bulged_det_positive(k, x1, x2):
    assert bulged(k).jac_det(np.array([x1, x2])) > 0


def test_bulged_area():
    # area = 4 + 16 k / 3
    g = square_grid(10)
    for k in (-0.3, 0.0, 0.3):
        assert mapped_area(bulged(k), g) == pytest.approx(4 + 16 * k / 3, rel=1e-13)


def test_bulged_maps_corners_and_edges():
    d = bulged(0.3)
    np.testing.assert_allclose(d.forward(np.array([[0, 0], [1, 1], [0.5, 0]])),
                               [[-1, -1], [1, 1], [0, -1.3]], atol=1e-15)


def test_bulged_operator_constant_vs_area_scale():
    g = square_grid(8)
    op = pullback_operator(bulged(0.2), g, mollifier(0.3), 1e-2, 2)
    assert np.all(op.matrix.sum(axis=1) > 0)
    assert op.meta.domain == ("bulged", 0.2)


def test_invalid_maps():
    with pytest.raises(InvalidArgument):
        rectangle(1, 0, 0, 1)
    with pytest.raises(InvalidArgument):
        bulged(0.5)
