"""
Chebyshev--Gauss--Lobatto grids on intervals, rectangles and boxes.

Every dense operator in the package uses the same node ordering: points are
ascending along each axis and flattened row-major with ``y`` outer and ``x``
inner, i.e. the 2D index of node ``(ix, iy)`` is ``iy * nx + ix``.  In 3D the
order is ``z`` outer, then ``y``, then ``x``.

All grids are immutable after construction (their arrays are read-only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _unit_nodes(n):
    # sine form keeps the nodes exactly symmetric (midpoint is exactly 1/2)
    k = np.arange(n)
    t = 0.5 * (1.0 + np.sin(np.pi * (2 * k - (n - 1)) / (2 * (n - 1))))
    t[0], t[-1] = 0.0, 1.0
    return t


def _bary_weights(n):
    w = np.ones(n)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def clenshaw_curtis_weights(n):
    """Clenshaw--Curtis weights for ``n`` Lobatto nodes on ``[-1, 1]``.

    Explicit cosine-sum formula, O(n^2).  The weights are symmetric, so the
    same array serves ascending and descending node orderings.
    """
    if n < 2:
        raise InvalidArgument("Clenshaw-Curtis rule needs n >= 2")
    if n == 2:
        return np.array([1.0, 1.0])
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    inner = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
        v -= np.cos(N * inner) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / N
    return w


def _diff_matrix(n, length):
    """Barycentric differentiation matrix on ascending nodes of ``[0, length]``."""
    theta = np.pi * np.arange(n) / (n - 1)
    # x_i - x_j on [0,1] written with sines to avoid cancellation
    ti, tj = np.meshgrid(theta, theta, indexing="ij")
    dx = np.sin(0.5 * (ti + tj)) * np.sin(0.5 * (ti - tj)) * length
    w = _bary_weights(n)
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Chebyshev--Gauss--Lobatto grid on ``[a, b]`` (ascending nodes)."""

    n: int
    a: float
    b: float
    points: np.ndarray
    weights: np.ndarray
    diff: np.ndarray

    @property
    def bary(self):
        return _bary_weights(self.n)

    @property
    def min_spacing(self):
        return float(self.points[1] - self.points[0])


def cheb_grid(n, a=0.0, b=1.0):
    """Build an ``n``-point Chebyshev--Gauss--Lobatto grid on ``[a, b]``.

    ``points[j] = a + (b - a) (1 - cos(j pi / (n - 1))) / 2``.
    """
    if int(n) != n or n < 2:
        raise InvalidArgument(f"grid needs n >= 2 points, got {n}")
    n = int(n)
    a, b = float(a), float(b)
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise InvalidArgument(f"invalid interval [{a}, {b}]")
    L = b - a
    x = a + L * _unit_nodes(n)
    x[-1] = b
    w = 0.5 * L * clenshaw_curtis_weights(n)
    return Grid1D(n, a, b, _frozen(x), _frozen(w), _frozen(_diff_matrix(n, L)))


def interp_matrix_1d(grid, targets):
    """Barycentric Lagrange interpolation matrix from ``grid`` nodes to ``targets``.

    Returns an array of shape ``(len(targets), grid.n)``.  Targets coinciding
    with a node (to within 1e-280, where ``w / diff`` would overflow) produce
    the corresponding unit row.
    """
    t = np.asarray(targets, dtype=float).ravel()
    if not np.all(np.isfinite(t)):
        raise InvalidArgument("interpolation targets must be finite")
    x = grid.points
    w = grid.bary
    diff = t[:, None] - x[None, :]
    exact = np.abs(diff) < 1e-280
    hit = exact.any(axis=1)
    diff[hit] = 1.0
    P = w[None, :] / diff
    with np.errstate(divide="ignore", invalid="ignore"):
        P /= P.sum(axis=1, keepdims=True)
    if hit.any():
        P[hit] = exact[hit].astype(float)
    return P


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Tensor CGL grid on ``[gx.a, gx.b] x [gy.a, gy.b]``.

    ``boundary_index`` lists every node on the rectangle boundary and
    ``boundary_normal`` its outward direction; corner nodes carry the sum of
    the two adjacent edge normals.
    """

    gx: Grid1D
    gy: Grid1D
    points: np.ndarray
    Dx: np.ndarray
    Dy: np.ndarray
    Lap: np.ndarray
    weights: np.ndarray
    boundary_index: np.ndarray
    boundary_normal: np.ndarray

    @property
    def nx(self):
        return self.gx.n

    @property
    def ny(self):
        return self.gy.n

    @property
    def M(self):
        return self.gx.n * self.gy.n

    @property
    def interior_mask(self):
        mask = np.ones(self.M, dtype=bool)
        mask[self.boundary_index] = False
        return mask

    def normal_derivative_rows(self):
        """Rows of the outward normal-derivative operator at ``boundary_index``."""
        nrm = self.boundary_normal
        idx = self.boundary_index
        return nrm[:, :1] * self.Dx[idx] + nrm[:, 1:] * self.Dy[idx]

    def integrate(self, f):
        return float(self.weights @ np.asarray(f, dtype=float))

    def as_image(self, f):
        """Reshape a flat field to ``(ny, nx)``."""
        return np.asarray(f).reshape(self.ny, self.nx)


def tensor_grid(gx, gy=None):
    """Tensor product of two 1D grids (row-major: y outer, x inner)."""
    if gy is None:
        gy = gx
    nx, ny = gx.n, gy.n
    X = np.tile(gx.points, ny)
    Y = np.repeat(gy.points, nx)
    pts = np.column_stack([X, Y])
    Dx = np.kron(np.eye(ny), gx.diff)
    Dy = np.kron(gy.diff, np.eye(nx))
    Lap = Dx @ Dx + Dy @ Dy
    W = np.kron(gy.weights, gx.weights)

    ix = np.tile(np.arange(nx), ny)
    iy = np.repeat(np.arange(ny), nx)
    nrm_x = np.where(ix == 0, -1.0, np.where(ix == nx - 1, 1.0, 0.0))
    nrm_y = np.where(iy == 0, -1.0, np.where(iy == ny - 1, 1.0, 0.0))
    on_bd = (nrm_x != 0) | (nrm_y != 0)
    bidx = np.flatnonzero(on_bd)
    normals = np.column_stack([nrm_x[bidx], nrm_y[bidx]])
    return Grid2D(
        gx, gy, _frozen(pts), _frozen(Dx), _frozen(Dy), _frozen(Lap), _frozen(W),
        _frozen_int(bidx), _frozen(normals),
    )


def _frozen_int(a):
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


def square_grid(n, a=0.0, b=1.0):
    """Convenience: ``n x n`` tensor grid on ``[a, b]^2``."""
    g = cheb_grid(n, a, b)
    return tensor_grid(g, g)


def barycentric_interp(src, targets):
    """Dense tensor-product interpolation matrix from ``src`` nodes to ``targets``.

    ``targets`` is an array of shape ``(P, 2)``; the result has shape
    ``(P, src.M)`` with columns in the grid's row-major order.
    """
    T = np.atleast_2d(np.asarray(targets, dtype=float))
    if T.shape[-1] != 2:
        raise InvalidArgument("targets must have shape (P, 2)")
    if not np.all(np.isfinite(T)):
        raise InvalidArgument("interpolation targets must be finite")
    Lx = interp_matrix_1d(src.gx, T[:, 0])
    Ly = interp_matrix_1d(src.gy, T[:, 1])
    return np.einsum("py,px->pyx", Ly, Lx).reshape(len(T), src.M)


@dataclass(frozen=True, eq=False)
class Grid3D:
    """Tensor CGL grid on a box, order z outer, y, x inner (no derivative operators)."""

    gx: Grid1D
    gy: Grid1D
    gz: Grid1D
    points: np.ndarray
    weights: np.ndarray

    @property
    def M(self):
        return self.gx.n * self.gy.n * self.gz.n

    @property
    def min_spacing(self):
        return min(self.gx.min_spacing, self.gy.min_spacing, self.gz.min_spacing)


def tensor_grid_3d(gx, gy=None, gz=None):
    gy = gx if gy is None else gy
    gz = gx if gz is None else gz
    Z, Y, X = np.meshgrid(gz.points, gy.points, gx.points, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    W = np.kron(gz.weights, np.kron(gy.weights, gx.weights))
    return Grid3D(gx, gy, gz, _frozen(pts), _frozen(W))
