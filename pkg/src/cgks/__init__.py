"""Structured-mesh gas-kinetic finite-volume solvers (second-order GKS and
fifth-order compact GKS) with a benchmark harness."""

from cgks.errors import (
    BoundaryStencilError,
    CGKSError,
    ConfigError,
    DomainError,
    MeshError,
    NumericalError,
    PositivityError,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryStencilError",
    "CGKSError",
    "ConfigError",
    "DomainError",
    "MeshError",
    "NumericalError",
    "PositivityError",
]
