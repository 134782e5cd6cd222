"""Morphogenetic calculus, observer Fisher geometry and Bohmian numerics on grids."""

from .errors import (
    CheckFailed,
    ConfigError,
    DegenerateMetric,
    DimensionMismatch,
    EmptyEnsemble,
    FDStepInvalid,
    GridMismatch,
    MorphoError,
    NonPositiveField,
    NonPositiveMicrostates,
    NotNormalized,
    QuadratureNotConverged,
    QuantumMassOverflow,
    RankDeficient,
    SingularFisher,
    StepInvalid,
)
from .fields import FieldSeries, Grid, ScalarField
from .quantum_potential import PhysicalConstants

__version__ = "0.1.0"

__all__ = [
    "CheckFailed",
    "ConfigError",
    "DegenerateMetric",
    "DimensionMismatch",
    "EmptyEnsemble",
    "FDStepInvalid",
    "FieldSeries",
    "Grid",
    "GridMismatch",
    "MorphoError",
    "NonPositiveField",
    "NonPositiveMicrostates",
    "NotNormalized",
    "PhysicalConstants",
    "QuadratureNotConverged",
    "QuantumMassOverflow",
    "RankDeficient",
    "ScalarField",
    "SingularFisher",
    "StepInvalid",
]
