"""Exception types shared across the solver."""

from __future__ import annotations


class CGKSError(Exception):
    """Base class for all solver errors."""


class ConfigError(CGKSError):
    """Invalid or inconsistent configuration."""


class MeshError(CGKSError):
    """Invalid mesh construction input."""


class BoundaryStencilError(MeshError):
    """A compact stencil reached a non-periodic boundary with no ghost policy."""


class DomainError(CGKSError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(CGKSError):
    """Singular or rank-deficient linear algebra, non-finite values."""


class PositivityError(CGKSError):
    """Density or pressure became non-positive.

    ``cell`` is the (i, j, k) lattice index when known, ``stage`` a short tag
    such as ``"stage1"`` or ``"face-x"``.
    """

    def __init__(self, message: str, cell=None, stage: str | None = None):
        super().__init__(message)
        self.cell = cell
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        extra = []
        if self.cell is not None:
            extra.append(f"cell={tuple(int(c) for c in self.cell)}")
        if self.stage:
            extra.append(f"stage={self.stage}")
        return f"{msg} ({', '.join(extra)})" if extra else msg
