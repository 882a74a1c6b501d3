"""Dense convolution operator container shared by assembly, kernels and the solver."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

PARTITION_MODES = {"maximal": 0, "minimal": 1, "direct3d": 2}
KERNEL_IDS = {"newt2d": 0, "newt3d": 1, "newt3d-reg": 2, "moll": 3, "mix": 4}


@dataclass(frozen=True)
class OperatorMeta:
    N: int
    eps: float
    alpha: float
    kernel_id: str
    partition_mode: str
    eta: float = 1.0
    corrected: bool = False
    domain: tuple = ()  # () for the unit square, ("rectangle", a1, b1, a2, b2) or ("bulged", k)
    composition: tuple = ()
    kernel_params: tuple = ()  # (a, mixture weight) or (sigma,) where relevant

    def __post_init__(self):
        if self.kernel_id not in KERNEL_IDS:
            raise ValueError(f"unknown kernel id {self.kernel_id!r}")
        if self.partition_mode not in PARTITION_MODES:
            raise ValueError(f"unknown partition mode {self.partition_mode!r}")


@dataclass(frozen=True, eq=False)
class ConvOperator:
    """Dense ``M x M`` matrix approximating ``rho -> K * rho`` on ``grid``."""

    grid: object
    matrix: np.ndarray
    meta: OperatorMeta
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator matrix contains non-finite entries")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def M(self):
        return self.matrix.shape[0]

    def __matmul__(self, v):
        return self.matrix @ v

    def apply(self, rho):
        return self.matrix @ np.asarray(rho, dtype=float)

    def scaled(self, eta):
        """``eta`` times this operator (metadata ``eta`` multiplied accordingly)."""
        return ConvOperator(self.grid, eta * self.matrix,
                            replace(self.meta, eta=self.meta.eta * eta), dict(self.extra))
