"""
Free-energy densities ``F`` and their first three derivatives.

Four kinds are available:

* ``logarithmic``: ``F(s) = theta/2 [(1+s) log(1+s) + (1-s) log(1-s)]`` on [-1, 1];
* ``regularized``: the logarithmic density on ``(-1+omega, 1-omega)``, extended
  outside by its third-order Taylor polynomial at the cutoff points;
* ``double-well``: ``F(s) = (s-1)^2``;
* ``quadratic``: ``F(s) = theta s^2 / 2``, used for linear (heat-equation) checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlog1py

from .errors import DomainError, InvalidArgument

KINDS = ("logarithmic", "regularized", "double-well", "quadratic")

#: Newton iterates of rho are clamped into [-1 + RHO_GUARD, 1 - RHO_GUARD]
#: whenever the logarithmic potential is in use.
RHO_GUARD = 1e-12


@dataclass(frozen=True)
class Potential:
    kind: str = "logarithmic"
    theta: float = 2.0
    omega: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown potential kind {self.kind!r}")
        if not self.theta > 0:
            raise InvalidArgument("theta must be positive")
        if self.kind == "regularized":
            if self.omega is None or not 0.0 < self.omega < 1.0:
                raise InvalidArgument("regularized potential needs omega in (0, 1)")

    @property
    def singular(self):
        return self.kind == "logarithmic"

    def __call__(self, s, order=0):
        return evaluate(self, s, order)


def logarithmic(theta=2.0):
    return Potential("logarithmic", theta)


def regularized(omega, theta=2.0):
    return Potential("regularized", theta, omega)


def _log_branch(theta, s, order):
    if order == 0:
        return 0.5 * theta * (xlog1py(1.0 + s, s) + xlog1py(1.0 - s, -s))
    if order == 1:
        return 0.5 * theta * (np.log1p(s) - np.log1p(-s))
    one_minus_s2 = (1.0 - s) * (1.0 + s)
    if order == 2:
        return theta / one_minus_s2
    return 2.0 * theta * s / one_minus_s2**2


def _taylor(theta, s0, d, order):
    c = [_log_branch(theta, s0, k) for k in range(4)]
    if order == 0:
        return c[0] + d * (c[1] + d * (c[2] / 2.0 + d * c[3] / 6.0))
    if order == 1:
        return c[1] + d * (c[2] + d * c[3] / 2.0)
    if order == 2:
        return c[2] + d * c[3]
    return c[3] + 0.0 * d


def evaluate(pot, s, order=0):
    """Evaluate ``F^(order)(s)`` elementwise (``order`` in 0..3)."""
    if order not in (0, 1, 2, 3):
        raise InvalidArgument(f"order must be 0..3, got {order}")
    s_arr = np.asarray(s, dtype=float)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)
    th = pot.theta

    if pot.kind == "logarithmic":
        bad = np.abs(s_arr) > 1.0 if order == 0 else np.abs(s_arr) >= 1.0
        if np.any(bad):
            raise DomainError(
                f"logarithmic potential order {order} undefined at s={s_arr[bad][0]!r}"
            )
        out = _log_branch(th, s_arr, order)
    elif pot.kind == "regularized":
        w = pot.omega
        lo, hi = -1.0 + w, 1.0 - w
        out = np.empty_like(s_arr)
        mid = (s_arr > lo) & (s_arr < hi)
        out[mid] = _log_branch(th, s_arr[mid], order)
        up = s_arr >= hi
        out[up] = _taylor(th, hi, s_arr[up] - hi, order)
        dn = s_arr <= lo
        out[dn] = _taylor(th, lo, s_arr[dn] - lo, order)
    elif pot.kind == "double-well":
        out = [(s_arr - 1.0) ** 2, 2.0 * (s_arr - 1.0),
               np.full_like(s_arr, 2.0), np.zeros_like(s_arr)][order]
    else:
        out = [0.5 * th * s_arr**2, th * s_arr,
               np.full_like(s_arr, th), np.zeros_like(s_arr)][order]
    return float(out[0]) if scalar else out


def clamp(pot, rho):
    """Clamp iterates into the open interval where ``F'`` is finite."""
    if pot.singular:
        return np.clip(rho, -1.0 + RHO_GUARD, 1.0 - RHO_GUARD)
    return rho
