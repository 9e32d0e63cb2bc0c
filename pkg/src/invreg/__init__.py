"""Inverse regression for multivariate Gaussian linear models.

Fits the inverse model (predictors regressed on responses), carries the
estimates to the forward model through an involutive mapping that never
inverts a D x D matrix, and builds chi-square calibrated confidence regions
for the forward slope and prediction ellipsoids for new responses.
"""

from .estimators import InverseRegression, LeastSquaresRegression
from .exceptions import (
    CalibrationError,
    InsufficientSampleError,
    SingularMatrixError,
    UnsupportedDesignError,
)
from .linalg import Ellipsoid, chi2_quantile, ellipsoid_volume
from .model import ForwardParams, InverseParams, involution_residual, snr, to_forward

__version__ = "0.1.0"

__all__ = [
    "InverseRegression",
    "LeastSquaresRegression",
    "InverseParams",
    "ForwardParams",
    "to_forward",
    "involution_residual",
    "snr",
    "Ellipsoid",
    "ellipsoid_volume",
    "chi2_quantile",
    "SingularMatrixError",
    "InsufficientSampleError",
    "UnsupportedDesignError",
    "CalibrationError",
    "__version__",
]
