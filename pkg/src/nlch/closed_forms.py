"""
Exact integrals of the 2D Newtonian kernel ``K(u) = log|u| / (2 pi)``.

On the unit square:

* ``I_square(x)``  -- integral of ``K`` over the rectangle ``[0, x1] x [0, x2]``;
* ``J_square(x)``  -- ``(K * 1)(x)`` over the whole square;
* ``G_eps_square`` -- integral of ``K`` over ``x - (square  ∩  B_inf(x; eps))``,
  the self-interaction correction.

On the unit disc: ``J_disc`` and ``G_eps_disc`` (the latter through the
dilogarithm, also provided here).
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import InvalidArgument

_TWO_PI = 2.0 * math.pi


def _as_points(x):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != 2:
        raise InvalidArgument("points must have a trailing dimension of size 2")
    return x, scalar


def _ret(v, scalar):
    return float(v[0]) if scalar else v


def quadrant_integral(a, b):
    """Integral of ``K`` over ``[0, a] x [0, b]`` for ``a, b >= 0`` (no domain check).

    Exactly zero when either side vanishes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    r2 = a * a + b * b
    d = b * b - a * a
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (
            a * b / (4.0 * math.pi) * (np.log(r2) - 3.0)
            + r2 / 16.0
            - d * np.arctan2(d, 2.0 * a * b) / (8.0 * math.pi)
        )
    return np.where((a == 0.0) | (b == 0.0), 0.0, v)


def _check_square(x):
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise InvalidArgument("point outside the closed unit square")


def I_square(x):
    """Closed-form ``I(x)``; ``x`` of shape ``(2,)`` or ``(P, 2)`` in ``[0, 1]^2``."""
    x, scalar = _as_points(x)
    _check_square(x)
    return _ret(quadrant_integral(x[:, 0], x[:, 1]), scalar)


def J_square(x):
    """Convolution of ``K`` with the indicator of the unit square.

    The four-quadrant sum also covers boundary points, because ``I`` vanishes
    exactly on the coordinate cross.
    """
    x, scalar = _as_points(x)
    _check_square(x)
    x1, x2 = x[:, 0], x[:, 1]
    y1, y2 = 1.0 - x1, 1.0 - x2
    v = (quadrant_integral(x1, x2) + quadrant_integral(y1, x2)
         + quadrant_integral(x1, y2) + quadrant_integral(y1, y2))
    return _ret(v, scalar)


def _check_eps(eps, upper=0.5):
    if not (np.isfinite(eps) and 0.0 < eps <= upper):
        raise InvalidArgument(f"eps must lie in (0, {upper}], got {eps}")


def G_eps_square(x, eps):
    """Integral of ``K`` over the part of ``B_inf(x; eps)`` inside the square."""
    _check_eps(eps)
    x, scalar = _as_points(x)
    _check_square(x)
    x1, x2 = x[:, 0], x[:, 1]
    y1, y2 = 1.0 - x1, 1.0 - x2
    m = np.minimum
    v = (quadrant_integral(m(x1, eps), m(x2, eps))
         + quadrant_integral(m(y1, eps), m(x2, eps))
         + quadrant_integral(m(x1, eps), m(y2, eps))
         + quadrant_integral(m(y1, eps), m(y2, eps)))
    return _ret(v, scalar)


def G_eps_interior(eps):
    """Value of ``G_eps`` at points at least ``eps`` away from the boundary."""
    return eps * eps / _TWO_PI * (4.0 * math.log(eps) + math.log(4.0) - 6.0 + math.pi)


def I_argmin():
    """Diagonal coordinate ``s`` at which ``I`` attains its minimum over the square."""
    return math.sqrt(2.0) / 2.0 * math.exp(1.0 - math.pi / 4.0)


# ---------------------------------------------------------------- dilogarithm

_PI2_6 = math.pi**2 / 6.0
# B_n / (n+1)! for the series Li2(z) = sum_n B_n u^{n+1} / (n+1)!, u = -log(1-z)
_b = [1.0, -0.5, 1 / 6, 0.0, -1 / 30, 0.0, 1 / 42, 0.0, -1 / 30, 0.0, 5 / 66, 0.0,
      -691 / 2730, 0.0, 7 / 6, 0.0, -3617 / 510, 0.0, 43867 / 798, 0.0, -174611 / 330,
      0.0, 854513 / 138, 0.0, -236364091 / 2730, 0.0, 8553103 / 6, 0.0,
      -23749461029 / 870, 0.0, 8615841276005 / 14322, 0.0, -7709321041217 / 510,
      0.0, 2577687858367 / 6, 0.0, -26315271553053477373 / 1919190, 0.0,
      2929993913841559 / 6, 0.0, -261082718496449122051 / 13530]
_BERN = [bn / math.factorial(n + 1) for n, bn in enumerate(_b)]


def _li2_power(z):
    s = 0j
    zk = z
    for k in range(1, 80):
        term = zk / (k * k)
        s += term
        if abs(term) < 1e-17 * max(abs(s), 1e-300):
            break
        zk *= z
    return s


def _li2_bernoulli(z):
    u = -cmath.log(1.0 - z)
    s = 0j
    uk = u
    for n, c in enumerate(_BERN):
        if c != 0.0:
            term = c * uk
            s += term
            if n > 4 and abs(term) < 1e-17 * abs(s):
                break
        uk *= u
    return s


def _li2_unit(z):
    """|z| <= 1."""
    if abs(z) <= 0.5:
        return _li2_power(z)
    if z.real > 0.5:
        w = 1.0 - z
        if w == 0:
            return complex(_PI2_6)
        return _PI2_6 - cmath.log(z) * cmath.log(w) - _li2_unit(w)
    return _li2_bernoulli(z)


def dilog(z):
    """Principal-branch dilogarithm ``Li2(z) = -int_0^z log(1-t)/t dt``.

    Power series for ``|z| <= 1/2``; reflection for ``Re z > 1/2``;
    inversion for ``|z| > 1``; the Bernoulli series in ``-log(1-z)`` covers
    the remaining part of the unit disc.  On the cut ``(1, inf)`` the value
    approached from below is returned (imaginary part ``-pi log z``).
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidArgument("dilog argument must be finite")
    if z == 0:
        return 0j
    if abs(z) <= 1.0:
        return _li2_unit(z)
    # inversion: Li2(z) = -pi^2/6 - log(-z)^2 / 2 - Li2(1/z)
    if z.imag == 0.0 and z.real > 1.0:
        lmz = complex(math.log(z.real), math.pi)
    else:
        lmz = cmath.log(-z)
    inv = 1.0 / z
    if z.imag == 0.0:
        inv = complex(inv.real, 0.0)
    return -_PI2_6 - 0.5 * lmz * lmz - _li2_unit(inv)


# ---------------------------------------------------------------- disc

def J_disc(x):
    """``(K * 1_disc)(x) = (|x|^2 - 1) / 4`` on the closed unit disc."""
    x, scalar = _as_points(x)
    r2 = np.sum(x * x, axis=1)
    if np.any(r2 > 1.0 + 1e-15) or not np.all(np.isfinite(r2)):
        raise InvalidArgument("point outside the closed unit disc")
    return _ret(0.25 * (r2 - 1.0), scalar)


def _clip_unit(v):
    return min(1.0, max(-1.0, v))


def _G_disc_scalar(a, eps):
    e2 = eps * eps
    inner = 0.25 * e2 * (math.log(e2) - 1.0)
    if a <= 1.0 - eps:
        return inner
    phi = math.acos(_clip_unit((1.0 - a * a - e2) / (2.0 * a * eps)))
    L = (e2 - 1.0 - a * a) / (2.0 * a)
    p = 0.5 * math.acos(_clip_unit(L))
    s2, c2 = math.sin(2.0 * p), math.cos(2.0 * p)
    li = dilog(-a * cmath.exp(2j * p)).imag
    H = (2.0 / math.pi) * (
        li
        + (1.0 - a * a) * (p - 0.5 * math.atan(a * s2 / (1.0 + a * c2)))
        + a * (1.0 - math.log(eps)) * s2
    ) - (1.0 - a * a)
    return 0.25 * ((math.pi - phi) / math.pi * e2 * (math.log(e2) - 1.0) + H)


def G_eps_disc(x, eps):
    """Integral of ``K`` over ``x - (disc ∩ B_2(x; eps))``, ``eps`` in (0, 1).

    Interior branch ``eps^2 (log eps^2 - 1) / 4`` for ``|x| <= 1 - eps``; the
    boundary branch uses the half-angle of the eps-circle arc lying outside
    the disc together with a dilogarithm term.
    """
    if not (np.isfinite(eps) and 0.0 < eps < 1.0):
        raise InvalidArgument(f"eps must lie in (0, 1), got {eps}")
    x, scalar = _as_points(x)
    r = np.hypot(x[:, 0], x[:, 1])
    if np.any(r > 1.0 + 1e-15) or not np.all(np.isfinite(r)):
        raise InvalidArgument("point outside the closed unit disc")
    v = np.array([_G_disc_scalar(min(float(a), 1.0), float(eps)) for a in r])
    return _ret(v, scalar)
