"""Constellation design and simulation for the noncoherent MIMO multiple-access channel."""

from .costs import Cost, CostKind, make_cost
from .errors import (
    CoincidentCodewordError,
    DegenerateRetractionError,
    InvalidDimensionsError,
    InvalidInputError,
    PreconditionError,
)
from .manifolds import Constellation, ManifoldKind, constraint_residual, random_constellation
from .optimizer import DescentTrace, OptimizerConfig, descend, optimize
from .sim import SerCurve, SimConfig, run_ser

__version__ = "0.1.0"

__all__ = [
    "Constellation",
    "ManifoldKind",
    "constraint_residual",
    "random_constellation",
    "Cost",
    "CostKind",
    "make_cost",
    "OptimizerConfig",
    "DescentTrace",
    "descend",
    "optimize",
    "SimConfig",
    "SerCurve",
    "run_ser",
    "CoincidentCodewordError",
    "DegenerateRetractionError",
    "InvalidDimensionsError",
    "InvalidInputError",
    "PreconditionError",
]
