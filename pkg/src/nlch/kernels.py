"""
Kernel catalogue.

``newtonian2d``              eta/(2 pi) log|x|
``newtonian3d``              -eta/(4 pi |x|)
``newtonian3d-regularized``  -eta/(4 pi max(sigma, |x|))
``mollifier``                eta a^-2 exp(-1/(1 - |x/a|^2)) on the disc of radius a (2D)
``composite``                sum of weight * component

The mollifier is deliberately *not* normalised to unit mass; its mass is
available from :func:`mollifier_mass`.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expn

from .errors import DomainError, InvalidArgument
from .operators import ConvOperator

KINDS = ("newtonian2d", "newtonian3d", "newtonian3d-regularized", "mollifier", "composite")
KERNEL_ID = {
    "newtonian2d": "newt2d",
    "newtonian3d": "newt3d",
    "newtonian3d-regularized": "newt3d-reg",
    "mollifier": "moll",
    "composite": "mix",
}
SINGULAR = ("newtonian2d", "newtonian3d")


class _Counter:
    """Thread-safe count of pointwise kernel evaluations (instrumentation)."""

    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def add(self, n):
        with self._lock:
            self.value += n

    def reset(self):
        with self._lock:
            self.value = 0


KERNEL_EVALS = _Counter()


@dataclass(frozen=True)
class Kernel:
    kind: str
    eta: float = 1.0
    a: float | None = None
    sigma: float | None = None
    components: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown kernel kind {self.kind!r}")
        if self.kind == "mollifier" and not (self.a and self.a > 0):
            raise InvalidArgument("mollifier needs a > 0")
        if self.kind == "newtonian3d-regularized" and not (self.sigma and self.sigma > 0):
            raise InvalidArgument("regularized 3D kernel needs sigma > 0")
        if self.kind == "composite" and not self.components:
            raise InvalidArgument("composite kernel needs components")

    @property
    def dim(self):
        if self.kind == "composite":
            return self.components[0][1].dim
        return 3 if self.kind.startswith("newtonian3d") else 2

    @property
    def singular(self):
        if self.kind == "composite":
            return any(k.singular for _, k in self.components)
        return self.kind in SINGULAR

    @property
    def id(self):
        return KERNEL_ID[self.kind]

    def scaled(self, eta):
        return replace(self, eta=self.eta * eta)

    def __call__(self, x):
        return eval_kernel(self, x)


def newtonian2d(eta=1.0):
    return Kernel("newtonian2d", eta)


def mollifier(a, eta=1.0):
    return Kernel("mollifier", eta, a=a)


def newtonian3d_regularized(sigma, eta=1.0):
    return Kernel("newtonian3d-regularized", eta, sigma=sigma)


def default_sigma(grid3, kappa=0.5):
    """``sigma = kappa * dx`` with ``dx`` the minimal Chebyshev spacing of the grid."""
    return kappa * grid3.min_spacing


def mollifier_mass():
    """``int_{R^2} H = pi E_2(1)``; identical for every ``H_a``."""
    return math.pi * float(expn(2, 1.0))


def eval_kernel(k, x):
    """Pointwise kernel value at displacement(s) ``x`` of shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    KERNEL_EVALS.add(int(np.size(r2)))
    kind = k.kind
    if kind == "newtonian2d":
        if np.any(r2 == 0.0):
            raise DomainError("2D Newtonian kernel is singular at the origin")
        return k.eta / (4.0 * math.pi) * np.log(r2)
    if kind == "newtonian3d":
        if np.any(r2 == 0.0):
            raise DomainError("3D Newtonian kernel is singular at the origin")
        return -k.eta / (4.0 * math.pi * np.sqrt(r2))
    if kind == "newtonian3d-regularized":
        return -k.eta / (4.0 * math.pi * np.maximum(k.sigma, np.sqrt(r2)))
    if kind == "mollifier":
        s = r2 / (k.a * k.a)
        out = np.zeros_like(s)
        inside = s < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
        return k.eta * out / (k.a * k.a)
    out = 0.0
    for w, comp in k.components:
        out = out + w * eval_kernel(comp, x)
    return k.eta * out


def composite(parts, eta=1.0):
    """Kernel ``eta * sum(w * K)`` over ``parts = [(w, Kernel), ...]``."""
    return Kernel("composite", eta, components=tuple((float(w), kk) for w, kk in parts))


def mixture(convA, convB, w, eta):
    """Entrywise ``eta * (A + w * B)``; both operators must share grid and shape."""
    if convA.matrix.shape != convB.matrix.shape:
        raise InvalidArgument(
            f"operator shapes differ: {convA.matrix.shape} vs {convB.matrix.shape}")
    if convA.grid is not convB.grid and convA.meta.N != convB.meta.N:
        raise InvalidArgument("operators live on different grids")
    mat = eta * (convA.matrix + w * convB.matrix)
    meta = replace(
        convA.meta,
        kernel_id="mix",
        eta=eta,
        corrected=convA.meta.corrected,
        composition=((1.0, convA.meta.kernel_id, convA.meta.eta),
                     (float(w), convB.meta.kernel_id, convB.meta.eta)),
    )
    return ConvOperator(convA.grid, mat, meta)
