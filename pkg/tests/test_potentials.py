import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlch.errors import DomainError, InvalidArgument
from nlch.potentials import RHO_GUARD, Potential, clamp, evaluate, logarithmic, regularized


@pytest.mark.parametrize("pot", [logarithmic(), logarithmic(1.3), regularized(0.05),
                                 Potential("double-well"), Potential("quadratic", 3.0)])
def test_derivatives_consistent_with_finite_differences(pot):
    s = np.linspace(-0.9, 0.9, 37)
    h = 1e-6
    for k in range(3):
        fd = (evaluate(pot, s + h, k) - evaluate(pot, s - h, k)) / (2 * h)
        np.testing.assert_allclose(fd, evaluate(pot, s, k + 1), rtol=1e-6, atol=1e-6)


def test_logarithmic_values():
    pot = logarithmic()
    assert evaluate(pot, 0.0) == 0.0
    assert evaluate(pot, 1.0) == pytest.approx(2 * np.log(2))
    assert evaluate(pot, 0.5, 1) == pytest.approx(np.log(3))
    with pytest.raises(DomainError):
        evaluate(pot, 1.0, 1)
    with pytest.raises(DomainError):
        evaluate(pot, -1.5)


def test_regularized_matches_inside_and_is_c2_at_cutoff():
    log, reg = logarithmic(), regularized(0.01)
    s = np.linspace(-0.98, 0.98, 11)
    for k in range(4):
        np.testing.assert_array_equal(evaluate(reg, s, k), evaluate(log, s, k))
    c = 1 - 0.01
    for k in range(3):
        assert evaluate(reg, c + 1e-12, k) == pytest.approx(evaluate(log, c, k), rel=1e-8)
    assert np.isfinite(evaluate(reg, 2.0, 1))


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_convexity_of_logarithmic(s):
    s = min(max(s, -1 + 1e-9), 1 - 1e-9)
    assert evaluate(logarithmic(), s, 2) >= 2.0


def test_clamp_guard():
    r = clamp(logarithmic(), np.array([-1.0, 0.3, 1.0]))
    assert r[0] == -1 + RHO_GUARD and r[2] == 1 - RHO_GUARD and r[1] == 0.3
    x = np.array([2.0])
    assert clamp(Potential("quadratic"), x) is x


def test_invalid_potentials():
    with pytest.raises(InvalidArgument):
        Potential("quartic")
    with pytest.raises(InvalidArgument):
        regularized(0.0)
    with pytest.raises(InvalidArgument):
        logarithmic(-1.0)
    with pytest.raises(InvalidArgument):
        evaluate(logarithmic(), 0.0, 4)
