"""Affine fractal interpolation functions and surfaces built from iterated function systems."""

from .errors import (
    ContinuityError,
    DomainError,
    FifError,
    InvalidDataError,
    InvalidScalingError,
    NonConvergenceError,
    ParseError,
    PolicyError,
)
from .fif1d import FixedPointConfig, GridFunction1D, fixed_point, integrate_closed_form
from .ifs1d import DataSet1D, Ifs1D, build_ifs

__version__ = "0.1.0"
