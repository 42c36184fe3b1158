"""Expanding self-similar solutions of the equivariant harmonic map heat flow."""

from .errors import HMFlowError, SchemaError
from .geometry import TargetSurfaceProfile, eigenmap_eigenvalue, minimizing_criterion
from .shooting import ShootSpec, integrate

__version__ = "0.1.0"

__all__ = [
    "HMFlowError",
    "SchemaError",
    "ShootSpec",
    "TargetSurfaceProfile",
    "eigenmap_eigenvalue",
    "integrate",
    "minimizing_criterion",
]
