"""Selective and conditional multiple testing: classical procedures, the
two-hypothesis toy model, winner inference, data splitting, lasso
inference conditional on selection, and a seeded Monte Carlo harness."""

from ._accel import get_backend, set_backend, use_backend
from .core import (
    ContractViolation,
    DegenerateInputError,
    ErrorRateKind,
    IndexSet,
    InputDataError,
    NumericalError,
    PVector,
    RngStream,
    TruthMask,
    UnboundedResultError,
    error_value,
    fdp,
    normal_cdf,
    normal_quantile,
    uniform01,
)

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "DegenerateInputError",
    "ErrorRateKind",
    "IndexSet",
    "InputDataError",
    "NumericalError",
    "PVector",
    "RngStream",
    "TruthMask",
    "UnboundedResultError",
    "error_value",
    "fdp",
    "get_backend",
    "normal_cdf",
    "normal_quantile",
    "set_backend",
    "uniform01",
    "use_backend",
]
