"""
Convolution on mapped domains ``Theta = Psi(square)``.

With ``u`` sampled at the mapped collocation points ``Psi(x_j)`` the discrete
identity ``C_{K, Theta} u = C_{K o Psi, square} diag(j) u`` holds, where
``j = |det J_Psi|``.  The square-side operator is assembled by the multishape
rows with the displacement ``Psi(x_i) - Psi(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .closed_forms import quadrant_integral
from .errors import InvalidArgument
from .kernels import Kernel, eval_kernel
from .multishape import _RowAssembler, assemble_rows, partition_box
from .operators import ConvOperator, OperatorMeta


@dataclass(frozen=True)
class DomainMap:
    kind: str
    params: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if not all(np.isfinite(p)):
            raise InvalidArgument("map parameters must be finite")
        if self.kind == "rectangle":
            if len(p) != 4 or not (p[1] > p[0] and p[3] > p[2]):
                raise InvalidArgument("rectangle needs a1 < b1, a2 < b2")
        elif self.kind == "bulged":
            if len(p) != 1 or not -0.5 < p[0] < 0.5:
                raise InvalidArgument("bulged map needs k in (-1/2, 1/2)")
        else:
            raise InvalidArgument(f"unknown map kind {self.kind!r}")

    @property
    def affine(self):
        return self.kind == "rectangle"

    @property
    def lengths(self):
        a1, b1, a2, b2 = self.params
        return b1 - a1, b2 - a2

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        if self.kind == "rectangle":
            a1, b1, a2, b2 = self.params
            y1 = (b1 - a1) * x1 + a1
            y2 = (b2 - a2) * x2 + a2
        else:
            k = self.params[0]
            y1 = (2 * x1 - 1) * (1 + 4 * k * x2 * (1 - x2))
            y2 = (2 * x2 - 1) * (1 + 4 * k * x1 * (1 - x1))
        return np.stack([y1, y2], axis=-1)

    def jacobian(self, x):
        """``J_Psi`` with shape ``x.shape[:-1] + (2, 2)``."""
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        J = np.zeros(x.shape[:-1] + (2, 2))
        if self.kind == "rectangle":
            L1, L2 = self.lengths
            J[..., 0, 0] = L1
            J[..., 1, 1] = L2
        else:
            k = self.params[0]
            J[..., 0, 0] = 2 + 8 * k * x2 * (1 - x2)
            J[..., 0, 1] = 4 * k * (2 * x1 - 1) * (1 - 2 * x2)
            J[..., 1, 0] = 4 * k * (2 * x2 - 1) * (1 - 2 * x1)
            J[..., 1, 1] = 2 + 8 * k * x1 * (1 - x1)
        return J

    def jac_det(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "rectangle":
            L1, L2 = self.lengths
            return np.full(x.shape[:-1], abs(L1 * L2))
        J = self.jacobian(x)
        return np.abs(J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0])

    def meta(self):
        return (self.kind,) + self.params


def rectangle(a1, b1, a2, b2):
    return DomainMap("rectangle", (a1, b1, a2, b2))


def bulged(k):
    return DomainMap("bulged", (k,))


def _gauss(n):
    s, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (s + 1), 0.5 * w


def polar_box_integral(f, xi, box, n=40):
    """Integral of ``f(y)`` over ``box = (l, r, b, t)`` containing ``xi``.

    ``f`` may have an integrable logarithmic singularity at ``xi``.  The box
    is split into eight triangles with apex ``xi``; each is integrated in
    polar coordinates with Gauss--Legendre rules and the substitution
    ``r = R s^2``, which smooths ``r log r`` at the apex.
    """
    l, r, b, t = box
    x1, x2 = float(xi[0]), float(xi[1])
    s, ws = _gauss(n)
    total = 0.0
    for sx, A in ((1.0, r - x1), (-1.0, x1 - l)):
        for sy, B in ((1.0, t - x2), (-1.0, x2 - b)):
            if A <= 0.0 or B <= 0.0:
                continue
            corner = np.arctan2(B, A)
            for th0, th1, side in ((0.0, corner, "x"), (corner, 0.5 * np.pi, "y")):
                th = th0 + (th1 - th0) * s
                wth = (th1 - th0) * ws
                R = A / np.cos(th) if side == "x" else B / np.sin(th)
                rr = R[:, None] * s[None, :] ** 2
                wr = R[:, None] * 2.0 * s[None, :] * ws[None, :]
                Y = np.empty(rr.shape + (2,))
                Y[..., 0] = x1 + sx * rr * np.cos(th)[:, None]
                Y[..., 1] = x2 + sy * rr * np.sin(th)[:, None]
                vals = f(Y) * rr * wr
                total += float(wth @ vals.sum(axis=1))
    return total


def _rectangle_near(dmap, pts, eps):
    """Closed-form near field of the log kernel under an affine map (times 1/j)."""
    L1, L2 = (abs(v) for v in dmap.lengths)
    x1, x2 = pts[:, 0], pts[:, 1]
    y1, y2 = 1.0 - x1, 1.0 - x2
    m = np.minimum
    v = (quadrant_integral(L1 * m(x1, eps), L2 * m(x2, eps))
         + quadrant_integral(L1 * m(y1, eps), L2 * m(x2, eps))
         + quadrant_integral(L1 * m(x1, eps), L2 * m(y2, eps))
         + quadrant_integral(L1 * m(y1, eps), L2 * m(y2, eps)))
    return v / (L1 * L2)


def pullback_operator(dmap, grid, kernel, eps, alpha, mode="maximal", correct=True,
                      threads=None, polar_n=40):
    """Operator acting on samples of ``u`` at ``Psi(x_j)`` and returning ``(K * u)(Psi(x_i))``."""
    if not isinstance(dmap, DomainMap):
        raise InvalidArgument("dmap must be a DomainMap")
    if not isinstance(kernel, Kernel) or kernel.dim != 2 or kernel.kind == "composite":
        raise InvalidArgument("pullback needs a 2D non-composite kernel")
    fwd = dmap.forward

    def disp(xi, P):
        return fwd(xi) - fwd(P)

    asm = _RowAssembler(grid, kernel, eps, alpha, mode, disp=disp,
                        near_field=bool(correct) and not kernel.singular)
    mat = assemble_rows(asm, grid.M, threads)
    pts = grid.points
    if correct and kernel.singular:
        if dmap.affine and kernel.kind == "newtonian2d":
            g = _rectangle_near(dmap, pts, eps)
        else:
            unit = replace(kernel, eta=1.0)
            g = np.empty(grid.M)
            for i, xi in enumerate(pts):
                box = partition_box(xi, eps, mode).box
                yi = fwd(xi)
                g[i] = polar_box_integral(lambda Y: eval_kernel(unit, yi - fwd(Y)),
                                          xi, box, polar_n)
        mat[np.diag_indices_from(mat)] += kernel.eta * g
    mat *= dmap.jac_det(pts)[None, :]
    meta = OperatorMeta(N=grid.nx, eps=float(eps), alpha=float(alpha), kernel_id=kernel.id,
                        partition_mode=mode, eta=kernel.eta, corrected=bool(correct),
                        domain=dmap.meta())
    return ConvOperator(grid, mat, meta)


def mapped_area(dmap, grid):
    """Quadrature of ``|det J_Psi|`` over the square, i.e. ``area(Theta)``."""
    return float(grid.weights @ dmap.jac_det(grid.points))
