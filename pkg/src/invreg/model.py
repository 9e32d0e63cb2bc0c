"""Parameter triples for the two Gaussian linear model directions.

The inverse model draws the response first and the predictors conditionally:

    Y ~ N_L(0, gamma),    X | Y ~ N_D(slope @ Y, diag(sigma_diag))

The forward model is the regression of interest:

    X ~ N_D(0, gamma_star),    Y | X ~ N_L(slope_star @ X, sigma_star)

Both parameterize the same joint Gaussian; ``to_forward`` carries one triple
to the other. The mapping only ever inverts L x L and diagonal matrices,
which is what makes the inverse-model fit usable when D >> N. Applying the
same algebraic map to the forward triple recovers the inverse triple (the
mapping is an involution); ``involution_residual`` measures that round trip.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .linalg import spd_cholesky, spd_inverse
from .validation import as_matrix, as_vector, check_spd

__all__ = [
    "InverseParams",
    "ForwardParams",
    "to_forward",
    "involution_residual",
    "snr",
]

# Noise-diagonal floor: keeps sigma^-1 (and therefore the mapping) defined on
# noiseless or degenerate inputs.
SIGMA_FLOOR = 1e-12


@dataclass
class InverseParams:
    """Inverse-model triple (gamma: L x L SPD, slope: D x L, sigma_diag: D)."""

    gamma: np.ndarray
    slope: np.ndarray
    sigma_diag: np.ndarray

    def __post_init__(self) -> None:
        self.gamma = check_spd(self.gamma, "gamma")
        l = self.gamma.shape[0]
        self.slope = as_matrix(self.slope, "slope")
        if self.slope.shape[1] != l:
            raise ValueError(
                f"slope must have {l} columns to match gamma, got {self.slope.shape}"
            )
        self.sigma_diag = as_vector(
            self.sigma_diag, "sigma_diag", length=self.slope.shape[0]
        )
        if np.any(self.sigma_diag < 0):
            raise ValueError("sigma_diag must be nonnegative")
        if np.any(self.sigma_diag < SIGMA_FLOOR):
            warnings.warn(
                f"sigma_diag entries below {SIGMA_FLOOR:g} floored to keep the "
                "noise covariance invertible",
                RuntimeWarning,
                stacklevel=2,
            )
            self.sigma_diag = np.maximum(self.sigma_diag, SIGMA_FLOOR)

    @property
    def n_targets(self) -> int:
        return self.gamma.shape[0]

    @property
    def n_features(self) -> int:
        return self.slope.shape[0]

    def to_forward(self) -> "ForwardParams":
        return to_forward(self)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.tolist(),
            "slope": self.slope.tolist(),
            "sigma_diag": self.sigma_diag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InverseParams":
        return cls(
            gamma=np.asarray(d["gamma"], dtype=float),
            slope=np.asarray(d["slope"], dtype=float),
            sigma_diag=np.asarray(d["sigma_diag"], dtype=float),
        )


@dataclass
class ForwardParams:
    """Forward-model triple (gamma_star: D x D SPD, slope_star: L x D, sigma_star: L x L SPD)."""

    gamma_star: np.ndarray
    slope_star: np.ndarray
    sigma_star: np.ndarray

    def __post_init__(self) -> None:
        self.gamma_star = check_spd(self.gamma_star, "gamma_star")
        self.sigma_star = check_spd(self.sigma_star, "sigma_star")
        d = self.gamma_star.shape[0]
        l = self.sigma_star.shape[0]
        self.slope_star = as_matrix(self.slope_star, "slope_star", shape=(l, d))

    @property
    def n_targets(self) -> int:
        return self.sigma_star.shape[0]

    @property
    def n_features(self) -> int:
        return self.gamma_star.shape[0]

    def to_dict(self) -> dict:
        return {
            "gamma_star": self.gamma_star.tolist(),
            "slope_star": self.slope_star.tolist(),
            "sigma_star": self.sigma_star.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForwardParams":
        return cls(
            gamma_star=np.asarray(d["gamma_star"], dtype=float),
            slope_star=np.asarray(d["slope_star"], dtype=float),
            sigma_star=np.asarray(d["sigma_star"], dtype=float),
        )


def to_forward(p: InverseParams) -> ForwardParams:
    """Map an inverse triple to the forward triple of the same joint Gaussian.

    gamma_star = sigma + slope @ gamma @ slope'
    sigma_star = (gamma^-1 + slope' sigma^-1 slope)^-1
    slope_star = sigma_star @ slope' @ sigma^-1

    Only the L x L matrix (gamma^-1 + slope' sigma^-1 slope) is factorized;
    the D x D gamma_star is assembled but never inverted here.
    """
    a = p.slope
    sigma = p.sigma_diag
    gamma_inv = spd_inverse(p.gamma, "gamma")
    # slope' sigma^-1 applied columnwise against the diagonal noise.
    at_sigma_inv = a.T / sigma[None, :]
    m = gamma_inv + at_sigma_inv @ a
    m = (m + m.T) / 2.0
    factor = spd_cholesky(m, "gamma^-1 + slope' sigma^-1 slope")
    sigma_star = cho_solve(factor, np.eye(m.shape[0]), check_finite=False)
    sigma_star = (sigma_star + sigma_star.T) / 2.0
    slope_star = cho_solve(factor, at_sigma_inv, check_finite=False)
    gamma_star = np.diag(sigma) + a @ p.gamma @ a.T
    gamma_star = (gamma_star + gamma_star.T) / 2.0
    return ForwardParams(
        gamma_star=gamma_star, slope_star=slope_star, sigma_star=sigma_star
    )


def _apply_map(gamma: np.ndarray, slope: np.ndarray, sigma: np.ndarray):
    """The same algebraic map on a generic (gamma, slope, sigma) triple.

    Shapes: gamma q x q, slope p x q, sigma p x p (dense). Returns the mapped
    (p x p, q x p, q x q) triple. Used by the involution check, where the
    input is a forward triple and a q x q (= D x D) factorization is allowed.
    """
    gamma_inv = spd_inverse(gamma, "gamma")
    sigma_inv = spd_inverse(sigma, "sigma")
    m = gamma_inv + slope.T @ sigma_inv @ slope
    m = (m + m.T) / 2.0
    factor = spd_cholesky(m, "mapped precision")
    new_sigma = cho_solve(factor, np.eye(m.shape[0]), check_finite=False)
    new_sigma = (new_sigma + new_sigma.T) / 2.0
    new_slope = cho_solve(factor, slope.T @ sigma_inv, check_finite=False)
    new_gamma = sigma + slope @ gamma @ slope.T
    return new_gamma, new_slope, new_sigma


def involution_residual(p: InverseParams) -> float:
    """Max relative deviation after mapping to forward and back.

    Applies the identical algebraic map to the forward triple (dimension
    roles swapped) and compares the result to ``p`` componentwise. Unlike
    ``to_forward``, the return leg factorizes a D x D matrix; this routine is
    a correctness check, not a fitting path.
    """
    f = to_forward(p)
    back_gamma, back_slope, back_sigma = _apply_map(
        f.gamma_star, f.slope_star, f.sigma_star
    )
    sigma_full = np.diag(p.sigma_diag)

    def rel(got: np.ndarray, want: np.ndarray) -> float:
        denom = max(float(np.linalg.norm(want)), 1e-300)
        return float(np.linalg.norm(got - want)) / denom

    return max(
        rel(back_gamma, p.gamma),
        rel(back_slope, p.slope),
        rel(back_sigma, sigma_full),
    )


def snr(f: ForwardParams) -> float:
    """Signal-to-noise ratio of the forward model.

    (1/L) * trace(slope_star @ gamma_star @ slope_star' @ sigma_star^-1):
    the mean, across response coordinates, of explained-to-residual variance.
    """
    w = f.slope_star @ f.gamma_star @ f.slope_star.T
    factor = spd_cholesky(f.sigma_star, "sigma_star")
    ratio = cho_solve(factor, w, check_finite=False)
    return float(np.trace(ratio)) / f.n_targets
