"""
Multishape assembly of dense convolution matrices for singular kernels.

For every collocation point ``x_i`` the punctured box
``square \\ B_inf(x_i; eps)`` is tiled by quadrilateral elements.  Each
element carries its own ``(alpha N)^2`` Chebyshev tensor rule; the kernel is
sampled at ``x_i - y`` on that rule and pulled back to the base grid through
barycentric interpolation.  The excluded eps-box is accounted for by the
closed-form correction ``G_eps`` (logarithmic kernel) or, for bounded
kernels, by one extra rectangular element covering the box.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf
from .errors import DomainError, GeometryError, InvalidArgument, ResourceError
from .kernels import Kernel, eval_kernel
from .operators import ConvOperator, OperatorMeta
from .spectral import _unit_nodes, clenshaw_curtis_weights, interp_matrix_1d

THIN = 1e-13
MIN_AREA = 1e-14
MEMORY_BUDGET = 2 * 1024**3


# ---------------------------------------------------------------- geometry

@dataclass(frozen=True)
class QuadElement:
    """Quadrilateral with counter-clockwise ``vertices`` (shape ``(4, 2)``).

    The reference square ``[0, 1]^2`` is mapped bilinearly:
    ``X(u, v) = (1-u)(1-v) v0 + u(1-v) v1 + u v v2 + (1-u) v v3``.
    """

    vertices: tuple

    @classmethod
    def rectangle(cls, x0, x1, y0, y1):
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    @property
    def v(self):
        return np.asarray(self.vertices, dtype=float)

    @property
    def is_rectangle(self):
        v = self.vertices
        return (v[0][1] == v[1][1] and v[2][1] == v[3][1]
                and v[0][0] == v[3][0] and v[1][0] == v[2][0])

    @property
    def bounds(self):
        v = self.vertices
        return v[0][0], v[1][0], v[0][1], v[3][1]

    @property
    def area(self):
        x, y = self.v[:, 0], self.v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def interior_angles(self):
        v = self.v
        out = []
        for k in range(4):
            a = v[k - 1] - v[k]
            b = v[(k + 1) % 4] - v[k]
            out.append(math.atan2(b[0] * a[1] - b[1] * a[0], a @ b) % (2 * math.pi))
        return out

    def map(self, u, v):
        u = np.asarray(u, dtype=float)[..., None]
        v = np.asarray(v, dtype=float)[..., None]
        P = self.v
        return ((1 - u) * (1 - v) * P[0] + u * (1 - v) * P[1]
                + u * v * P[2] + (1 - u) * v * P[3])

    def jacobian(self, u, v):
        u = np.asarray(u, dtype=float)[..., None]
        v = np.asarray(v, dtype=float)[..., None]
        P = self.v
        du = (1 - v) * (P[1] - P[0]) + v * (P[2] - P[3])
        dv = (1 - u) * (P[3] - P[0]) + u * (P[2] - P[1])
        return du[..., 0] * dv[..., 1] - du[..., 1] * dv[..., 0]

    def nodes(self, mx, my=None):
        """Tensor Chebyshev rule on the element: points ``(my, mx, 2)`` and weights ``(my, mx)``."""
        my = mx if my is None else my
        u, wu = _unit_rule(mx)
        s, ws = _unit_rule(my)
        V, U = np.meshgrid(s, u, indexing="ij")
        pts = self.map(U, V)
        w = np.outer(ws, wu) * self.jacobian(U, V)
        return pts, w


_RULES = {}


def _unit_rule(m):
    r = _RULES.get(m)
    if r is None:
        r = (_unit_nodes(m), 0.5 * clenshaw_curtis_weights(m))
        _RULES[m] = r
    return r


@dataclass(frozen=True)
class Partition:
    case: str
    mode: str
    elements: tuple
    box: tuple  # (l, r, b, t): eps-box clipped to the square

    @property
    def area(self):
        return math.fsum(e.area for e in self.elements)


def _box(x, eps):
    x1, x2 = float(x[0]), float(x[1])
    l, r = max(0.0, x1 - eps), min(1.0, x1 + eps)
    b, t = max(0.0, x2 - eps), min(1.0, x2 + eps)
    # snap eps-flush sides onto the boundary
    l = 0.0 if l < THIN else l
    b = 0.0 if b < THIN else b
    r = 1.0 if 1.0 - r < THIN else r
    t = 1.0 if 1.0 - t < THIN else t
    return l, r, b, t


def classify(x, eps):
    """``corner``, ``edge`` or ``interior`` (closed comparison: distance eps counts as near)."""
    near_x = x[0] <= eps or 1.0 - x[0] <= eps
    near_y = x[1] <= eps or 1.0 - x[1] <= eps
    if near_x and near_y:
        return "corner"
    if near_x or near_y:
        return "edge"
    return "interior"


def partition_box(x, eps, mode="maximal"):
    """Tile ``square \\ B_inf(x; eps)`` by quadrilaterals.

    ``maximal`` cuts the square along the lines through the sides of the
    eps-box (8, 5 or 3 rectangles); ``minimal`` joins each corner of the
    eps-box to the matching corner of the square (4, 3 or 2 trapezoids).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (2,) or not np.all(np.isfinite(x)) or np.any(x < 0) or np.any(x > 1):
        raise InvalidArgument("x must be a point of the closed unit square")
    if not (np.isfinite(eps) and 0.0 < eps < 0.5):
        raise InvalidArgument(f"eps must lie in (0, 1/2), got {eps}")
    l, r, b, t = _box(x, eps)
    elems = []
    if mode == "maximal":
        xs = sorted({0.0, l, r, 1.0})
        ys = sorted({0.0, b, t, 1.0})
        for y0, y1 in zip(ys[:-1], ys[1:]):
            if y1 - y0 < THIN:
                continue
            for x0, x1 in zip(xs[:-1], xs[1:]):
                if x1 - x0 < THIN or (x0 == l and x1 == r and y0 == b and y1 == t):
                    continue
                elems.append(QuadElement.rectangle(x0, x1, y0, y1))
    elif mode == "minimal":
        if b > 0.0:
            elems.append(QuadElement(((0.0, 0.0), (1.0, 0.0), (r, b), (l, b))))
        if r < 1.0:
            elems.append(QuadElement(((1.0, 0.0), (1.0, 1.0), (r, t), (r, b))))
        if t < 1.0:
            elems.append(QuadElement(((1.0, 1.0), (0.0, 1.0), (l, t), (r, t))))
        if l > 0.0:
            elems.append(QuadElement(((0.0, 1.0), (0.0, 0.0), (l, b), (l, t))))
    else:
        raise InvalidArgument(f"unknown partition mode {mode!r}")
    for e in elems:
        if e.area < MIN_AREA:
            raise GeometryError(f"degenerate element of area {e.area:.3e}", x, eps)
    return Partition(classify(x, eps), mode, tuple(elems), (l, r, b, t))


# ---------------------------------------------------------------- assembly

def _kahan_add(s, c, t):
    tmp = s + t
    c += np.where(np.abs(s) >= np.abs(t), (s - tmp) + t, (t - tmp) + s)
    return tmp, c


def _points_per_axis(grid, alpha):
    out = []
    for n in (grid.nx, grid.ny):
        m = alpha * n
        mi = int(round(m))
        if abs(m - mi) > 1e-9 * max(1.0, m) or mi < 2:
            raise InvalidArgument(f"alpha * N must be an integer >= 2, got {m}")
        out.append(mi)
    return tuple(out)


def _identity_disp(xi, pts):
    return xi - pts


def _eval(kernel, d):
    if isinstance(kernel, Kernel):
        return eval_kernel(kernel, d)
    return np.asarray(kernel(d), dtype=float)


class _RowAssembler:
    """Row builder holding the per-assembly interpolation cache."""

    def __init__(self, grid, kernel, eps, alpha, mode, disp=None, near_field=False):
        self.grid = grid
        self.kernel = kernel
        self.eps = float(eps)
        self.mode = mode
        self.mx, self.my = _points_per_axis(grid, alpha)
        self.disp = disp or _identity_disp
        self.near_field = near_field
        self._cache = {}

    def _interp(self, axis, lo, hi):
        key = (axis, lo, hi)
        hit = self._cache.get(key)
        if hit is None:
            m = self.mx if axis == 0 else self.my
            u, w = _unit_rule(m)
            pts = lo + (hi - lo) * u
            pts[-1] = hi
            g = self.grid.gx if axis == 0 else self.grid.gy
            hit = (pts, (hi - lo) * w, interp_matrix_1d(g, pts))
            self._cache[key] = hit
        return hit

    def element_row(self, xi, e):
        """Contribution of element ``e`` as an ``(ny, nx)`` array."""
        if e.is_rectangle:
            x0, x1, y0, y1 = e.bounds
            px, wx, Lx = self._interp(0, x0, x1)
            py, wy, Ly = self._interp(1, y0, y1)
            P = np.empty((len(py), len(px), 2))
            P[..., 0] = px[None, :]
            P[..., 1] = py[:, None]
            K = _eval(self.kernel, self.disp(xi, P))
            return Ly.T @ ((np.outer(wy, wx) * K) @ Lx)
        P, W = e.nodes(self.mx, self.my)
        P = P.reshape(-1, 2)
        c = W.ravel() * _eval(self.kernel, self.disp(xi, P))
        Lx = interp_matrix_1d(self.grid.gx, P[:, 0])
        Ly = interp_matrix_1d(self.grid.gy, P[:, 1])
        return (Ly * c[:, None]).T @ Lx

    def row(self, i):
        xi = self.grid.points[i]
        part = partition_box(xi, self.eps, self.mode)
        elems = list(part.elements)
        if self.near_field:
            l, r, b, t = part.box
            elems.append(QuadElement.rectangle(l, r, b, t))
        s = np.zeros((self.grid.ny, self.grid.nx))
        c = np.zeros_like(s)
        try:
            for e in elems:
                s, c = _kahan_add(s, c, self.element_row(xi, e))
        except DomainError as exc:  # cannot happen: the eps-box is never sampled
            raise AssertionError(f"kernel evaluated at a singular point in row {i}") from exc
        return (s + c).ravel()


def assemble_row(grid, i, kernel, eps, alpha, mode="maximal", near_field=False):
    """Row ``i`` of the uncorrected multishape convolution matrix.

    ``kernel`` is a :class:`Kernel` or any vectorised callable of the
    displacement ``x_i - y`` (trailing axis of size 2).  With
    ``near_field=True`` the eps-box itself is added as one more element,
    which is only legitimate for bounded kernels.
    """
    if not 0 <= i < grid.M:
        raise InvalidArgument(f"row index {i} out of range")
    return _RowAssembler(grid, kernel, eps, alpha, mode, near_field=near_field).row(i)


def _default_threads():
    return os.cpu_count() or 1


def assemble_rows(asm, M, threads=None):
    threads = threads or _default_threads()
    out = np.empty((M, M))

    def work(i):
        try:
            out[i] = asm.row(i)
        except GeometryError as exc:
            raise GeometryError(f"row {i}: {exc}") from exc

    if threads <= 1:
        for i in range(M):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(M)))
    return out


def assemble_operator(grid, kernel, eps, alpha, mode="maximal", correct=True, threads=None):
    """Dense multishape approximation of ``rho -> K * rho`` on ``grid``.

    With ``correct`` the eps-box contribution is included: through
    ``eta * diag(G_eps(x_i))`` for the logarithmic kernel, by direct
    quadrature over the box for bounded kernels.  Composite kernels are
    assembled component by component.
    """
    if not isinstance(kernel, Kernel):
        raise InvalidArgument("assemble_operator needs a Kernel")
    if kernel.dim != 2:
        raise InvalidArgument("multishape assembly is two-dimensional")
    if grid.gx.a != 0.0 or grid.gx.b != 1.0 or grid.gy.a != 0.0 or grid.gy.b != 1.0:
        raise InvalidArgument("multishape assembly works on the unit square grid")
    meta = OperatorMeta(N=grid.nx, eps=float(eps), alpha=float(alpha), kernel_id=kernel.id,
                        partition_mode=mode, eta=kernel.eta, corrected=bool(correct))
    if kernel.kind == "composite":
        total = np.zeros((grid.M, grid.M))
        for w, comp in kernel.components:
            sub = assemble_operator(grid, comp, eps, alpha, mode, correct, threads)
            total += w * sub.matrix
        return ConvOperator(grid, kernel.eta * total, meta)
    asm = _RowAssembler(grid, kernel, eps, alpha, mode,
                        near_field=bool(correct) and not kernel.singular)
    mat = assemble_rows(asm, grid.M, threads)
    if correct and kernel.singular:
        g = cf.G_eps_square(grid.points, eps)
        mat[np.diag_indices_from(mat)] += kernel.eta * g
    return ConvOperator(grid, mat, meta)


def validate(op):
    """Pointwise error ``e_eps = |J - I_1[1] - G_eps|`` at every collocation point."""
    m = op.meta
    if m.kernel_id != "newt2d" or m.eta != 1.0 or m.domain:
        raise InvalidArgument("validation needs the unscaled 2D Newtonian operator on the square")
    pts = op.grid.points
    J = cf.J_square(pts)
    s = op.matrix.sum(axis=1)
    G = cf.G_eps_square(pts, m.eps)
    approx = s if m.corrected else s + G
    e = np.abs(J - approx)
    return {
        "e": e,
        "max": float(e.max()),
        "mean": float(e.mean()),
        "raw_deviation": np.abs(J - s),
        "max_abs_G": float(np.abs(G).max()),
    }


# ---------------------------------------------------------------- 3D

def assemble_operator_3d(grid3, kernel, eta=1.0, budget=MEMORY_BUDGET):
    """Direct quadrature ``A_ij = eta K_sigma(x_i - x_j) w_j`` on a 3D tensor grid."""
    if not isinstance(kernel, Kernel) or kernel.kind != "newtonian3d-regularized":
        raise InvalidArgument("3D assembly needs the regularized 3D Newtonian kernel")
    M = grid3.M
    # matrix plus one M x M work array
    need = 2 * 8 * M * M
    if need > budget:
        raise ResourceError(f"3D operator needs {need / 2**30:.2f} GiB, budget {budget / 2**30:.2f} GiB")
    P = grid3.points
    mat = np.empty((M, M))
    step = max(1, int(2**24 // max(M, 1)))
    for s in range(0, M, step):
        d = P[s:s + step, None, :] - P[None, :, :]
        mat[s:s + step] = eval_kernel(kernel, d)
    mat *= eta * grid3.weights[None, :]
    meta = OperatorMeta(N=grid3.gx.n, eps=float(kernel.sigma), alpha=1.0, kernel_id="newt3d-reg",
                        partition_mode="direct3d", eta=eta * kernel.eta, corrected=False)
    return ConvOperator(grid3, mat, meta)
