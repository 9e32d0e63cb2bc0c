"""Exception types shared across the package."""

__all__ = [
    "SingularMatrixError",
    "InsufficientSampleError",
    "UnsupportedDesignError",
    "CalibrationError",
]


class SingularMatrixError(ValueError):
    """A matrix required to be positive definite failed its factorization."""


class InsufficientSampleError(ValueError):
    """Too few observations for the requested fit (N <= L)."""


class UnsupportedDesignError(ValueError):
    """Design outside the estimator's domain (forward least squares with N <= D)."""


class CalibrationError(RuntimeError):
    """Signal-to-noise calibration could not reach its target."""
