"""Covariance of the fitted forward slope, confidence and prediction regions.

The fitted inverse slope has a matrix-normal law with row covariance sigma
and column covariance (Y'Y)^-1, so vec of it is Gaussian with covariance
kron((Y'Y)^-1, sigma) under column stacking. The forward slope is a smooth
image of the inverse slope; its differential at A, applied to a perturbation
H, is

    D(H) = sigma_star H' sigma^-1
         - sigma_star H' sigma^-1 A A_star
         - A_star H A_star            (an L x D matrix),

and propagating the matrix-normal law through this linear map gives the
DL x DL covariance of vec(slope_star_hat):

    Theta = T kron((Y'Y)^-1, sigma) T',

where T is the matrix of vec(H) -> vec(D(H)). T splits into the same three
terms as D, assembled from Kronecker products and the commutation
permutation; expanding T S T' reproduces the three variance and three cross
terms of the closed form. Building Theta as one congruence keeps every cross
term's sign tied to the differential itself and makes the result symmetric
positive semidefinite by construction.

Conventions, fixed package-wide: vec stacks columns; the covariance is
finite-sample (the column covariance of the slope estimator is (Y'Y)^-1, not
its large-N limit), and the chi-square statistics carry no extra N factor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, eigh

from .estimation import FitResult, LseFitResult
from .linalg import (
    Ellipsoid,
    chi2_quantile,
    commutation_matrix,
    kron,
    spd_cholesky,
    spd_inverse,
    vec,
)
from .model import InverseParams, ForwardParams, to_forward
from .validation import as_matrix, as_vector

__all__ = [
    "SlopeCovariance",
    "slope_differential",
    "slope_map_jacobian",
    "slope_covariance",
    "ConfidenceRegion",
    "confidence_region",
    "PredictionRegion",
    "prediction_region",
    "lse_prediction_region",
    "region_metrics",
]

EIGENVALUE_FLOOR = 1e-12
# Fraction of floored eigenvalues above which the covariance is reported as
# ill-conditioned.
FLOOR_WARN_FRACTION = 0.01


@dataclass
class SlopeCovariance:
    """DL x DL covariance of vec(slope_star_hat) with its scaling convention.

    scaling "finite_sample": the slope estimator's column covariance enters
    as (Y'Y)^-1, so the matrix is the covariance of vec(slope_star_hat)
    itself. scaling "per_sqrt_n": multiplied by n, approximating the
    covariance of sqrt(n) times the estimation error.
    """

    matrix: np.ndarray
    scaling: str
    n_targets: int
    n_features: int
    n_floored: int = 0

    @property
    def dim(self) -> int:
        return self.n_targets * self.n_features


def slope_differential(
    p: InverseParams, h, forward: ForwardParams | None = None
) -> np.ndarray:
    """Apply the differential of the inverse-to-forward slope map at p to h.

    h is a D x L perturbation of the inverse slope; the result is the L x D
    first-order response of the forward slope. Linear in h.
    """
    h = as_matrix(h, "h", shape=(p.n_features, p.n_targets))
    f = forward if forward is not None else to_forward(p)
    a = p.slope
    a_star = f.slope_star
    sigma_star = f.sigma_star
    ht_sigma_inv = h.T / p.sigma_diag[None, :]
    term1 = sigma_star @ ht_sigma_inv
    term2 = sigma_star @ (ht_sigma_inv @ a) @ a_star
    term3 = a_star @ h @ a_star
    return term1 - term2 - term3


def slope_map_jacobian(p: InverseParams, forward: ForwardParams | None = None) -> np.ndarray:
    """Matrix of the linear map vec(h) -> vec(slope_differential(p, h)).

    Assembled from Kronecker products and the commutation permutation: with
    c = sigma^-1 - slope_star' slope' sigma^-1 the transpose-route terms
    collapse to (c kron sigma_star) T, and the direct term is
    (slope_star' kron slope_star).
    """
    f = forward if forward is not None else to_forward(p)
    d, l = p.n_features, p.n_targets
    a_star = f.slope_star
    at_sigma_inv = p.slope.T / p.sigma_diag[None, :]
    c = np.diag(1.0 / p.sigma_diag) - a_star.T @ at_sigma_inv
    # T sends vec(H) to vec(H') for D x L perturbations.
    t_perm = commutation_matrix(d, l)
    jac = t_perm.apply_to_cols(kron(c, f.sigma_star)) - kron(a_star.T, a_star)
    return jac


def slope_covariance(
    p: InverseParams,
    yty,
    *,
    scaling: str = "finite_sample",
    n: int | None = None,
    forward: ForwardParams | None = None,
) -> SlopeCovariance:
    """Covariance of vec of the fitted forward slope.

    Propagates the matrix-normal law of the inverse slope estimator (row
    covariance sigma, column covariance (Y'Y)^-1) through the slope map's
    differential: Theta = T kron((Y'Y)^-1, sigma) T'. The result is
    symmetrized and eigenvalue-floored at 1e-12; if more than 1% of the
    spectrum is floored an ill-conditioning warning names the dimensions.
    """
    if scaling not in ("finite_sample", "per_sqrt_n"):
        raise ValueError(f"unknown scaling {scaling!r}")
    yty = as_matrix(yty, "yty", shape=(p.n_targets, p.n_targets))
    gram_inv = spd_inverse(yty, "response Gram matrix Y'Y")
    jac = slope_map_jacobian(p, forward)
    s = kron(gram_inv, np.diag(p.sigma_diag))
    theta = jac @ s @ jac.T
    theta = (theta + theta.T) / 2.0
    # Deterministic PSD repair: clip the spectrum from below.
    w, v = eigh(theta)
    n_floored = int(np.sum(w < EIGENVALUE_FLOOR))
    if n_floored:
        w = np.maximum(w, EIGENVALUE_FLOOR)
    theta = (v * w) @ v.T
    theta = (theta + theta.T) / 2.0
    if n_floored > FLOOR_WARN_FRACTION * theta.shape[0]:
        warnings.warn(
            f"slope covariance is ill-conditioned: {n_floored} of "
            f"{theta.shape[0]} eigenvalues floored "
            f"(D={p.n_features}, L={p.n_targets}, N={n if n is not None else 'unknown'})",
            RuntimeWarning,
            stacklevel=2,
        )
    if scaling == "per_sqrt_n":
        if n is None:
            raise ValueError("per_sqrt_n scaling requires the sample size n")
        theta = theta * n
    return SlopeCovariance(
        matrix=theta,
        scaling=scaling,
        n_targets=p.n_targets,
        n_features=p.n_features,
        n_floored=n_floored,
    )


@dataclass
class ConfidenceRegion:
    """Ellipsoidal confidence region for the forward slope, in vec coordinates.

    Membership: (vec(a) - center)' Theta^-1 (vec(a) - center) <= radius2 with
    radius2 the chi-square quantile at DL degrees of freedom.
    """

    center: np.ndarray
    covariance: SlopeCovariance
    level: float
    radius2: float

    def __post_init__(self) -> None:
        self.center = as_vector(self.center, "center", length=self.covariance.dim)
        self._factor = spd_cholesky(self.covariance.matrix, "slope covariance")

    def _as_vec(self, candidate) -> np.ndarray:
        candidate = np.asarray(candidate, dtype=float)
        if candidate.ndim == 2:
            expected = (self.covariance.n_targets, self.covariance.n_features)
            if candidate.shape != expected:
                raise ValueError(
                    f"candidate slope must have shape {expected}, got {candidate.shape}"
                )
            return vec(candidate)
        return as_vector(candidate, "candidate", length=self.covariance.dim)

    def statistic(self, candidate) -> float:
        """Quadratic-form distance of a candidate slope from the center."""
        z = self._as_vec(candidate) - self.center
        return float(z @ cho_solve(self._factor, z, check_finite=False))

    def contains(self, candidate) -> bool:
        return self.statistic(candidate) <= self.radius2

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "shape": self.covariance.matrix.tolist(),
            "radius2": self.radius2,
            "level": self.level,
        }


def confidence_region(fit: FitResult, level: float) -> ConfidenceRegion:
    """Confidence region for the forward slope at the given level."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    cov = slope_covariance(fit.inverse, fit.yty, n=fit.n, forward=fit.forward)
    dof = fit.n_features * fit.n_targets
    return ConfidenceRegion(
        center=vec(fit.forward.slope_star),
        covariance=cov,
        level=level,
        radius2=chi2_quantile(dof, level),
    )


@dataclass
class PredictionRegion:
    """Prediction ellipsoid for a new response.

    The shape splits into the slope-estimation part omega and the intrinsic
    noise sigma_star; the ellipsoid's shape is their sum and its squared
    radius is the chi-square quantile at L degrees of freedom.
    """

    ellipsoid: Ellipsoid
    omega: np.ndarray
    sigma_star: np.ndarray
    level: float

    @property
    def center(self) -> np.ndarray:
        return self.ellipsoid.center

    def contains(self, y) -> bool:
        return self.ellipsoid.contains(y)

    def statistic(self, y) -> float:
        return self.ellipsoid.statistic(y)

    def volume(self) -> float:
        return self.ellipsoid.volume()

    def to_dict(self) -> dict:
        metrics = region_metrics(self)
        out = self.ellipsoid.to_dict()
        out["level"] = self.level
        out["volume"] = metrics["volume"]
        out["normalized_volume"] = metrics["normalized_volume"]
        return out


def _omega_from_covariance(cov: SlopeCovariance, x_centered: np.ndarray) -> np.ndarray:
    """(x' kron I_L) Theta (x kron I_L), contracted without densifying krons."""
    l, d = cov.n_targets, cov.n_features
    theta4 = cov.matrix.reshape(d, l, d, l)
    omega = np.einsum("jimk,j,m->ik", theta4, x_centered, x_centered)
    return (omega + omega.T) / 2.0


def prediction_region(
    fit: FitResult,
    x_new,
    level: float = 0.95,
    *,
    covariance: SlopeCovariance | None = None,
) -> PredictionRegion:
    """Prediction ellipsoid for the response at a new predictor profile.

    Center: slope_star @ (x_new - x_means) + y_means. Shape: omega +
    sigma_star, where omega = (x' kron I_L) Theta (x kron I_L) is the
    variance contributed by slope estimation at this profile. A precomputed
    slope covariance can be passed when many profiles share one fit.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    x_new = as_vector(x_new, "x_new", length=fit.n_features)
    cov = covariance
    if cov is None:
        cov = slope_covariance(fit.inverse, fit.yty, n=fit.n, forward=fit.forward)
    x_centered = x_new - fit.x_means
    omega = _omega_from_covariance(cov, x_centered)
    shape = omega + fit.forward.sigma_star
    shape = (shape + shape.T) / 2.0
    center = fit.forward.slope_star @ x_centered + fit.y_means
    ellipsoid = Ellipsoid(
        center=center, shape=shape, radius2=chi2_quantile(fit.n_targets, level)
    )
    return PredictionRegion(
        ellipsoid=ellipsoid, omega=omega, sigma_star=fit.forward.sigma_star, level=level
    )


def lse_prediction_region(fit: LseFitResult, x_new, level: float = 0.95) -> PredictionRegion:
    """Prediction ellipsoid for the forward least-squares baseline.

    Shape: (1 + x' (X'X)^-1 x) sigma_star with the same chi-square radius as
    the inverse-regression region.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    x_new = as_vector(x_new, "x_new", length=fit.n_features)
    x_centered = x_new - fit.x_means
    factor = spd_cholesky(fit.xtx, "predictor Gram matrix X'X")
    leverage = float(
        x_centered @ cho_solve(factor, x_centered, check_finite=False)
    )
    omega = leverage * fit.forward.sigma_star
    shape = (1.0 + leverage) * fit.forward.sigma_star
    center = fit.forward.slope_star @ x_centered + fit.y_means
    ellipsoid = Ellipsoid(
        center=center, shape=shape, radius2=chi2_quantile(fit.n_targets, level)
    )
    return PredictionRegion(
        ellipsoid=ellipsoid, omega=omega, sigma_star=fit.forward.sigma_star, level=level
    )


def region_metrics(r: PredictionRegion) -> dict:
    """Raw ellipsoid volume and its dimension-normalized companion volume^(1/L)."""
    volume = r.ellipsoid.volume()
    l = r.ellipsoid.dim
    return {"volume": volume, "normalized_volume": float(volume ** (1.0 / l))}
