"""Scalar-response path, implemented independently of the matrix machinery.

For L = 1 the forward slope map has an explicit gradient, the slope
covariance is a plain D x D quadratic form in that gradient, and the
prediction region is an interval. None of this goes through Kronecker
products or commutation permutations, which is the point: the module exists
to cross-check the multivariate code, and the two paths are required to
agree to 1e-8 at L = 1.

Scaling convention is shared with the multivariate module: finite-sample,
with 1/(y'y) in the role of the slope estimator's column variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import FitResult
from .linalg import chi2_quantile, spd_solve
from .model import InverseParams
from .validation import as_vector, check_positive_vector

__all__ = [
    "UniParams",
    "from_inverse",
    "slope_gradient",
    "slope_covariance",
    "PredictionInterval",
    "prediction_interval",
    "confidence_statistic",
]


@dataclass
class UniParams:
    """Scalar-response inverse parameters (gamma, slope: D, sigma_diag: D, s_star).

    s_star is the forward noise variance 1 / (1/gamma + slope' sigma^-1 slope);
    it is stored and validated rather than recomputed at every use.
    """

    gamma: float
    slope: np.ndarray
    sigma_diag: np.ndarray
    s_star: float

    def __post_init__(self) -> None:
        self.gamma = float(self.gamma)
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        self.slope = as_vector(self.slope, "slope")
        self.sigma_diag = check_positive_vector(
            self.sigma_diag, "sigma_diag", length=self.slope.shape[0]
        )
        self.s_star = float(self.s_star)
        expected = 1.0 / (1.0 / self.gamma + float(self.slope @ (self.slope / self.sigma_diag)))
        if abs(self.s_star - expected) > 1e-12 * max(abs(expected), 1.0):
            raise ValueError("s_star is inconsistent with (gamma, slope, sigma_diag)")

    @property
    def n_features(self) -> int:
        return self.slope.shape[0]

    @property
    def slope_star(self) -> np.ndarray:
        """Forward slope row s_star * slope' sigma^-1 as a length-D vector."""
        return self.s_star * self.slope / self.sigma_diag


def make_uni_params(gamma: float, slope, sigma_diag) -> UniParams:
    slope = as_vector(slope, "slope")
    sigma_diag = check_positive_vector(sigma_diag, "sigma_diag", length=slope.shape[0])
    s_star = 1.0 / (1.0 / float(gamma) + float(slope @ (slope / sigma_diag)))
    return UniParams(gamma=float(gamma), slope=slope, sigma_diag=sigma_diag, s_star=s_star)


def from_inverse(p: InverseParams) -> UniParams:
    """Specialize an L = 1 inverse triple to the scalar parameterization."""
    if p.n_targets != 1:
        raise ValueError(f"scalar path requires L = 1, got L = {p.n_targets}")
    return make_uni_params(
        gamma=float(p.gamma[0, 0]), slope=p.slope[:, 0], sigma_diag=p.sigma_diag
    )


def slope_gradient(p: UniParams) -> np.ndarray:
    """Gradient (D x D) of the forward-slope map at the inverse slope.

    grad = -2 s_star sigma^-1 slope slope_star + s_star sigma^-1, where
    slope_star is the forward slope row. Column j is the derivative of the
    forward slope with respect to inverse slope coordinate j, transposed.
    """
    sigma_inv_slope = p.slope / p.sigma_diag
    grad = -2.0 * p.s_star * np.outer(sigma_inv_slope, p.slope_star)
    grad[np.diag_indices_from(grad)] += p.s_star / p.sigma_diag
    return grad


def slope_covariance(p: UniParams, yty: float) -> np.ndarray:
    """Finite-sample covariance (D x D) of the fitted forward slope.

    (1/y'y) grad' sigma grad, symmetrized. The 1/(y'y) factor is the scalar
    column variance of the inverse-slope estimator, matching the multivariate
    convention.
    """
    yty = float(yty)
    if yty <= 0:
        raise ValueError(f"yty must be positive, got {yty}")
    grad = slope_gradient(p)
    cov = grad.T @ (p.sigma_diag[:, None] * grad) / yty
    return (cov + cov.T) / 2.0


@dataclass
class PredictionInterval:
    """Scalar prediction interval, serialized as a degenerate 1-D ellipsoid."""

    center: float
    variance: float
    level: float

    def __post_init__(self) -> None:
        self.center = float(self.center)
        self.variance = float(self.variance)
        if self.variance <= 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        self.radius2 = chi2_quantile(1, self.level)
        self.half_width = float(np.sqrt(self.variance * self.radius2))

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def contains(self, y: float) -> bool:
        return abs(float(y) - self.center) <= self.half_width

    def volume(self) -> float:
        return 2.0 * self.half_width

    def to_dict(self) -> dict:
        return {
            "center": [self.center],
            "shape": [[self.variance]],
            "radius2": self.radius2,
            "level": self.level,
            "volume": self.volume(),
            "normalized_volume": self.volume(),
        }


def _uni_fit_pieces(fit: FitResult) -> tuple[UniParams, float]:
    if fit.n_targets != 1:
        raise ValueError(f"scalar path requires L = 1, got L = {fit.n_targets}")
    return from_inverse(fit.inverse), float(fit.yty[0, 0])


def prediction_interval(fit: FitResult, x_new, level: float = 0.95) -> PredictionInterval:
    """Prediction interval for a scalar response at a new predictor profile.

    variance = x' Cov(slope_star_hat) x + s_star at the centered profile;
    half-width = sqrt(variance * chi2_quantile(1, level)).
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    p, yty = _uni_fit_pieces(fit)
    x_new = as_vector(x_new, "x_new", length=p.n_features)
    x_centered = x_new - fit.x_means
    cov = slope_covariance(p, yty)
    variance = float(x_centered @ cov @ x_centered) + p.s_star
    center = float(p.slope_star @ x_centered) + float(fit.y_means[0])
    return PredictionInterval(center=center, variance=variance, level=level)


def confidence_statistic(fit: FitResult, candidate) -> float:
    """Quadratic-form confidence statistic for a candidate forward slope.

    (a - a_hat)' Cov^-1 (a - a_hat) with the finite-sample covariance; equals
    the multivariate region statistic at L = 1.
    """
    p, yty = _uni_fit_pieces(fit)
    candidate = np.asarray(candidate, dtype=float).reshape(-1)
    candidate = as_vector(candidate, "candidate", length=p.n_features)
    cov = slope_covariance(p, yty)
    z = candidate - p.slope_star
    return float(z @ spd_solve(cov, z, "slope covariance"))
