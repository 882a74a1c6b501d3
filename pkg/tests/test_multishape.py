import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlch import closed_forms as cf
from nlch.errors import InvalidArgument, ResourceError
from nlch.kernels import (KERNEL_EVALS, mollifier, mollifier_mass, newtonian2d,
                          newtonian3d_regularized)
from nlch.multishape import (QuadElement, assemble_operator, assemble_operator_3d, assemble_row,
                             classify, partition_box, validate)
from nlch.spectral import cheb_grid, square_grid, tensor_grid_3d

points = st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
epsilons = st.floats(1e-6, 0.49)


@settings(max_examples=200, deadline=None)
@given(points, epsilons, st.sampled_from(["maximal", "minimal"]))
def test_partition_tiles_punctured_square(x, eps, mode):
    p = partition_box(np.array(x), eps, mode)
    l, r, b, t = p.box
    assert math.isclose(p.area + (r - l) * (t - b), 1.0, abs_tol=1e-13)
    for e in p.elements:
        assert e.area > 0
        assert math.isclose(sum(e.interior_angles()), 2 * math.pi, abs_tol=1e-12)


@pytest.mark.parametrize("x,case,nmax,nmin", [((0.5, 0.5), "interior", 8, 4),
                                               ((0.0, 0.5), "edge", 5, 3),
                                               ((0.0, 1.0), "corner", 3, 2)])
def test_partition_counts(x, case, nmax, nmin):
    assert len(partition_box(np.array(x), 0.1, "maximal").elements) == nmax
    p = partition_box(np.array(x), 0.1, "minimal")
    assert p.case == case and len(p.elements) == nmin


def test_classify_uses_closed_comparison():
    assert classify((0.25, 0.5), 0.25) == "edge"
    assert classify((0.25 + 1e-12, 0.5), 0.25) == "interior"


def test_partition_rejects_bad_eps():
    with pytest.raises(InvalidArgument):
        partition_box(np.array([0.5, 0.5]), 0.5)
    with pytest.raises(InvalidArgument):
        partition_box(np.array([1.5, 0.5]), 0.1)


def test_quad_element_map_and_jacobian():
    e = QuadElement(((0.0, 0.0), (1.0, 0.0), (0.7, 0.2), (0.3, 0.2)))
    pts, w = e.nodes(9)
    assert w.sum() == pytest.approx(e.area, rel=1e-14)
    assert not e.is_rectangle and QuadElement.rectangle(0, 1, 0, 2).is_rectangle


def test_row_matches_operator_and_threads_are_deterministic():
    g = square_grid(6)
    a = assemble_operator(g, newtonian2d(), 1e-2, 2, correct=False, threads=1)
    b = assemble_operator(g, newtonian2d(), 1e-2, 2, correct=False, threads=4)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    np.testing.assert_array_equal(assemble_row(g, 7, newtonian2d(), 1e-2, 2), a.matrix[7])


def test_row_accepts_callable_kernel():
    g = square_grid(5)
    row = assemble_row(g, 3, lambda d: np.ones(d.shape[:-1]), 0.1, 2)
    part = partition_box(g.points[3], 0.1)
    assert row.sum() == pytest.approx(part.area, rel=1e-13)


def test_minimal_and_maximal_agree():
    g = square_grid(8)
    a = assemble_operator(g, newtonian2d(), 1e-2, 4, "maximal").matrix.sum(axis=1)
    b = assemble_operator(g, newtonian2d(), 1e-2, 4, "minimal").matrix.sum(axis=1)
    J = cf.J_square(g.points)
    assert np.max(np.abs(a - J)) < 1e-12
    assert np.max(np.abs(b - J)) < 1e-7


def test_correction_adds_G_on_diagonal():
    g = square_grid(6)
    c = assemble_operator(g, newtonian2d(), 1e-2, 2, correct=True)
    u = assemble_operator(g, newtonian2d(), 1e-2, 2, correct=False)
    np.testing.assert_allclose(np.diag(c.matrix) - np.diag(u.matrix),
                               cf.G_eps_square(g.points, 1e-2), atol=1e-17)
    assert c.meta.corrected and not u.meta.corrected


def test_validate_reports_errors():
    op = assemble_operator(square_grid(10), newtonian2d(), 1e-2, 4)
    v = validate(op)
    assert v["max"] < 1e-10 and v["e"].shape == (100,)
    with pytest.raises(InvalidArgument):
        validate(op.scaled(2.0))


def test_mollifier_row_mass_converges_in_alpha():
    g = square_grid(12)
    centre = int(np.argmin(np.sum((g.points - 0.5) ** 2, axis=1)))
    errs = [abs(assemble_row(g, centre, mollifier(0.1), 1e-5, a, near_field=True).sum()
                - mollifier_mass()) for a in (2, 4, 8, 16)]
    assert errs[0] > errs[1] > errs[2] > errs[3]
    assert errs[3] < 1e-7


def test_mollifier_operator_includes_near_field():
    g = square_grid(6)
    op = assemble_operator(g, mollifier(0.3), 0.05, 2)
    for i in (0, 14):
        row = assemble_row(g, i, mollifier(0.3), 0.05, 2, near_field=True)
        np.testing.assert_allclose(op.matrix[i], row, rtol=1e-14, atol=1e-16)


def test_alpha_times_N_must_be_integer():
    with pytest.raises(InvalidArgument):
        assemble_operator(square_grid(5), newtonian2d(), 1e-2, 0.5)


def test_3d_resource_guard_and_counter():
    g3 = tensor_grid_3d(cheb_grid(4, -1, 1))
    k = newtonian3d_regularized(0.1)
    with pytest.raises(ResourceError):
        assemble_operator_3d(g3, k, budget=1000)
    KERNEL_EVALS.reset()
    op = assemble_operator_3d(g3, k, eta=2.0)
    assert KERNEL_EVALS.value == 64 * 64
    assert op.meta.partition_mode == "direct3d" and op.meta.eta == 2.0


def test_regularized_kernel_bound_interior():
    # |(K_sigma - K) * 1|(x) <= sigma^2 / 6 whenever B(x, sigma) lies in the domain:
    # int_{|y|<s} (1/|y| - 1/s) dy / (4 pi) = s^2 / 6 exactly
    s = 0.03
    r = np.linspace(0, s, 20001)
    val = np.trapezoid(4 * np.pi * r**2 * (1 / np.maximum(r, 1e-300) - 1 / s), r) / (4 * np.pi)
    assert val == pytest.approx(s * s / 6, rel=1e-6)
