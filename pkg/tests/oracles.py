"""
Independent reference values used by the test suite.

Nothing here calls the closed forms under test: square integrals go through
adaptive polar quadrature, disc values through a lens quadrature and
mpmath's polylog, and the 3D potential of a cube through the elementary
antiderivative of 1/|x|.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate

TWO_PI = 2.0 * math.pi


def _polar_rect(a, b):
    """Integral of log(r)/(2 pi) over [0, a] x [0, b] with the apex at the origin."""
    if a == 0.0 or b == 0.0:
        return 0.0
    corner = math.atan2(b, a)

    def radial(R):
        # int_0^R r log r dr
        return 0.5 * R * R * (math.log(R) - 0.5)

    lo = integrate.quad(lambda t: radial(a / math.cos(t)), 0.0, corner,
                        epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    hi = integrate.quad(lambda t: radial(b / math.sin(t)), corner, 0.5 * math.pi,
                        epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return (lo + hi) / TWO_PI


def I_oracle(x1, x2):
    return _polar_rect(x1, x2)


def J_oracle(x1, x2):
    return (_polar_rect(x1, x2) + _polar_rect(1 - x1, x2)
            + _polar_rect(x1, 1 - x2) + _polar_rect(1 - x1, 1 - x2))


def G_oracle(x1, x2, eps):
    m = min
    return (_polar_rect(m(x1, eps), m(x2, eps)) + _polar_rect(m(1 - x1, eps), m(x2, eps))
            + _polar_rect(m(x1, eps), m(1 - x2, eps)) + _polar_rect(m(1 - x1, eps), m(1 - x2, eps)))


def J_disc_oracle(a):
    """(K * 1_disc) at distance ``a`` from the centre, polar about the point."""
    def f(psi):
        b = a * math.cos(psi)
        R = -b + math.sqrt(b * b + 1 - a * a)
        return 0.5 * R * R * (math.log(R) - 0.5) if R > 0 else 0.0
    v = integrate.quad(f, 0, math.pi, points=[0.5 * math.pi], epsabs=1e-14, epsrel=1e-12,
                       limit=200)[0]
    return 2 * v / TWO_PI


def G_disc_oracle(a, eps):
    """Integral of K over disc ∩ B_2(x; eps), ``|x| = a``, by polar quadrature about x."""
    c = (1 - a * a - eps * eps) / (2 * a * eps) if a > 0 else 2.0
    th = math.acos(max(-1.0, min(1.0, c))) if abs(c) <= 1 else (0.0 if c > 1 else math.pi)

    def f(psi):
        b = a * math.cos(psi)
        R = min(eps, -b + math.sqrt(b * b + 1 - a * a))
        return 0.5 * R * R * (math.log(R) - 0.5) if R > 0 else 0.0
    pts = [th] if 0 < th < math.pi else None
    v = integrate.quad(f, 0, math.pi, points=pts, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    return 2 * v / TWO_PI


def dilog_oracle(z):
    return complex(mp.polylog(2, mp.mpc(z)))


def _F3(x, y, z):
    # antiderivative of 1/|x| over a box corner at the origin
    r = np.sqrt(x * x + y * y + z * z)
    with np.errstate(all="ignore"):
        t = (x * y * np.log(z + r) + y * z * np.log(x + r) + z * x * np.log(y + r)
             - x * x / 2 * np.arctan(y * z / (x * r)) - y * y / 2 * np.arctan(x * z / (y * r))
             - z * z / 2 * np.arctan(x * y / (z * r)))
    return np.nan_to_num(t)


def cube_newton_potential(p, lo=-1.0, hi=1.0):
    """``int_{[lo, hi]^3} -1 / (4 pi |p - y|) dy`` at points ``p`` (shape (P, 3))."""
    p = np.asarray(p, dtype=float)
    tot = 0.0
    for sx, X in ((1, hi - p[:, 0]), (-1, lo - p[:, 0])):
        for sy, Y in ((1, hi - p[:, 1]), (-1, lo - p[:, 1])):
            for sz, Z in ((1, hi - p[:, 2]), (-1, lo - p[:, 2])):
                tot = tot + sx * sy * sz * _F3(X, Y, Z)
    return -tot / (4 * math.pi)
