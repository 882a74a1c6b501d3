import math

import numpy as np
import pytest
from scipy import integrate

from nlch import initial
from nlch.errors import InvalidArgument
from nlch.kernels import mollifier
from nlch.multishape import assemble_operator
from nlch.spectral import square_grid


def test_wave_values():
    v = initial.wave(np.array([[0.25, 0.0], [0.75, 0.5]]))
    np.testing.assert_allclose(v, [1.0, 1.0], atol=1e-15)


def test_compact_against_cartesian_quadrature():
    a = 0.1
    for x in ([0.5, 0.5], [0.15, 0.2], [0.86, 0.5]):
        def f(y2, y1):
            s2 = ((x[0] - y1) ** 2 + (x[1] - y2) ** 2) / a**2
            h = math.exp(-1 / (1 - s2)) / a**2 if s2 < 1 else 0.0
            return h * float(initial.q_bump(np.array([y1, y2])))
        lo, hi = initial.Q_CENTER - initial.Q_HALF, initial.Q_CENTER + initial.Q_HALF
        ref = 3 * integrate.dblquad(f, max(lo, x[0] - a), min(hi, x[0] + a),
                                    max(lo, x[1] - a), min(hi, x[1] + a), epsabs=1e-12)[0]
        assert initial.compact(np.array([x]))[0] == pytest.approx(ref, abs=1e-9)


def test_compact_mean_matches_quadrature():
    g = square_grid(30)
    assert g.integrate(initial.compact(g.points, n_t=24)) == pytest.approx(initial.compact_mean(),
                                                                          abs=1e-4)


def test_compact_via_operator_converges_to_quadrature():
    # nodal sampling of the bump limits the operator route to slow convergence
    err = []
    for n in (10, 20):
        g = square_grid(n)
        H = assemble_operator(g, mollifier(0.1), 1e-5, 4)
        diff = initial.compact_via_operator(H, g.points) - initial.compact(g.points, n_t=24)
        err.append(np.max(np.abs(diff)))
    assert err[1] < 0.6 * err[0] and err[1] < 0.1


def test_constant_and_errors():
    assert np.all(initial.constant(np.zeros((3, 2)), -0.5) == -0.5)
    with pytest.raises(InvalidArgument):
        initial.constant(np.zeros((3, 2)), np.nan)
    with pytest.raises(InvalidArgument):
        initial.compact(np.zeros((1, 2)), a=0.0)
