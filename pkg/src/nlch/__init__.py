"""Nonlocal Cahn--Hilliard equations with multishape convolution operators."""

from .errors import (ConfigError, DomainError, GeometryError, InitializationError,
                     IntegrationFailure, InvalidArgument, NLCHError, ResourceError)
from .kernels import Kernel, composite, mixture, mollifier, newtonian2d, newtonian3d_regularized
from .multishape import assemble_operator, assemble_operator_3d, partition_box, validate
from .operators import ConvOperator, OperatorMeta
from .potentials import Potential, logarithmic, regularized
from .solver import SolverConfig, integrate, regularized_shift_check
from .spectral import cheb_grid, square_grid, tensor_grid, tensor_grid_3d

__version__ = "0.1.0"
