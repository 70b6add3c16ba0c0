"""Space-time Petrov-Galerkin discretizations of the wave equation and its modal ODE."""

from .errors import (
    ConfigError,
    InvalidArgumentError,
    MeshMismatchError,
    NoConvergenceError,
    NonPositivePivotError,
    OutOfDomainError,
    RhsSyntaxError,
    SingularSystemError,
    SolverError,
    StwaveError,
)
from .mesh import Mesh1d, Quadrature, TensorGrid, gauss_rule, make_uniform_mesh

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InvalidArgumentError",
    "MeshMismatchError",
    "Mesh1d",
    "NoConvergenceError",
    "NonPositivePivotError",
    "OutOfDomainError",
    "Quadrature",
    "RhsSyntaxError",
    "SingularSystemError",
    "SolverError",
    "StwaveError",
    "TensorGrid",
    "gauss_rule",
    "make_uniform_mesh",
]
