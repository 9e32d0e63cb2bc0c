"""Least-squares fitting of the inverse model, and the forward baseline.

The inverse-model fit regresses predictors on responses, so the only Gram
matrix it factorizes is L x L. Forward parameters then come through the
model mapping. The classical forward least-squares fit is provided as a
baseline for designs with N > D; it is exactly the estimator that breaks
when D exceeds N, which is the situation the inverse route exists for.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from .exceptions import InsufficientSampleError, SingularMatrixError, UnsupportedDesignError
from .linalg import spd_cholesky
from .model import ForwardParams, InverseParams, to_forward
from .validation import as_matrix, as_vector

__all__ = [
    "Dataset",
    "FitResult",
    "LseFitResult",
    "center",
    "fit_inverse",
    "fit_forward",
    "fit_lse",
    "load_matrix_csv",
    "save_matrix_csv",
]

SIGMA_FLOOR = 1e-12


@dataclass
class Dataset:
    """Paired observation blocks: x is N x D (predictors), y is N x L (responses).

    Rows are observations. ``centered`` marks that column means have been
    removed; the removed means ride along for prediction-time use.
    """

    x: np.ndarray
    y: np.ndarray
    centered: bool = False
    x_means: np.ndarray | None = None
    y_means: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.x = as_matrix(self.x, "x")
        self.y = as_matrix(self.y, "y")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"x and y must have the same number of rows, got "
                f"{self.x.shape[0]} and {self.y.shape[0]}"
            )
        if self.x.shape[0] < 2:
            raise ValueError("at least 2 observations are required")
        if self.x_means is not None:
            self.x_means = as_vector(self.x_means, "x_means", length=self.x.shape[1])
        if self.y_means is not None:
            self.y_means = as_vector(self.y_means, "y_means", length=self.y.shape[1])

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    @property
    def n_targets(self) -> int:
        return self.y.shape[1]

    def center(self) -> "Dataset":
        return center(self)

    def assume_centered(self) -> "Dataset":
        """Mark the data as already centered (means recorded as zero)."""
        if self.centered:
            return self
        return Dataset(
            x=self.x,
            y=self.y,
            centered=True,
            x_means=np.zeros(self.n_features),
            y_means=np.zeros(self.n_targets),
        )


def center(d: Dataset) -> Dataset:
    """Remove column means from both blocks, retaining them on the result."""
    if d.centered:
        return d
    x_means = d.x.mean(axis=0)
    y_means = d.y.mean(axis=0)
    y_centered = d.y - y_means
    if np.any(np.ptp(y_centered, axis=0) == 0.0):
        warnings.warn(
            "a response column is constant after centering (degenerate response)",
            RuntimeWarning,
            stacklevel=2,
        )
    return Dataset(
        x=d.x - x_means,
        y=y_centered,
        centered=True,
        x_means=x_means,
        y_means=y_means,
    )


@dataclass
class FitResult:
    """Inverse-model fit plus its forward image and the pieces inference needs.

    ``yty`` is the response Gram matrix Y'Y of the centered data; it carries
    the finite-sample scale of the slope estimator's covariance.
    """

    inverse: InverseParams
    forward: ForwardParams
    n: int
    yty: np.ndarray
    x_means: np.ndarray
    y_means: np.ndarray

    def __post_init__(self) -> None:
        self.yty = as_matrix(self.yty, "yty")
        self.x_means = as_vector(self.x_means, "x_means")
        self.y_means = as_vector(self.y_means, "y_means")
        recomputed = to_forward(self.inverse)
        for got, want, name in (
            (self.forward.gamma_star, recomputed.gamma_star, "gamma_star"),
            (self.forward.slope_star, recomputed.slope_star, "slope_star"),
            (self.forward.sigma_star, recomputed.sigma_star, "sigma_star"),
        ):
            scale = max(float(np.linalg.norm(want)), 1.0)
            if np.linalg.norm(got - want) > 1e-10 * scale:
                raise ValueError(
                    f"forward.{name} is inconsistent with the inverse parameters"
                )

    @property
    def n_features(self) -> int:
        return self.inverse.n_features

    @property
    def n_targets(self) -> int:
        return self.inverse.n_targets

    def predict_mean(self, x_new) -> np.ndarray:
        """Point prediction slope_star @ (x_new - x_means) + y_means."""
        x_new = as_vector(x_new, "x_new", length=self.n_features)
        return self.forward.slope_star @ (x_new - self.x_means) + self.y_means

    def to_dict(self) -> dict:
        d = self.inverse.to_dict()
        d.update(self.forward.to_dict())
        d["n"] = self.n
        d["yty"] = self.yty.tolist()
        d["x_means"] = self.x_means.tolist()
        d["y_means"] = self.y_means.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            inverse=InverseParams.from_dict(d),
            forward=ForwardParams.from_dict(d),
            n=int(d["n"]),
            yty=np.asarray(d["yty"], dtype=float),
            x_means=np.asarray(d["x_means"], dtype=float),
            y_means=np.asarray(d["y_means"], dtype=float),
        )


@dataclass
class LseFitResult:
    """Forward least-squares fit (N > D designs) with its prediction inputs."""

    forward: ForwardParams
    n: int
    xtx: np.ndarray
    x_means: np.ndarray
    y_means: np.ndarray

    @property
    def n_features(self) -> int:
        return self.forward.n_features

    @property
    def n_targets(self) -> int:
        return self.forward.n_targets

    def predict_mean(self, x_new) -> np.ndarray:
        x_new = as_vector(x_new, "x_new", length=self.n_features)
        return self.forward.slope_star @ (x_new - self.x_means) + self.y_means


def _require_centered(d: Dataset) -> Dataset:
    if not d.centered:
        raise ValueError("dataset must be centered first (center() or assume_centered())")
    return d


def fit_inverse(d: Dataset) -> InverseParams:
    """Least-squares estimates of the inverse-model triple.

    gamma_hat = Y'Y / (N-1); slope_hat = X'Y (Y'Y)^-1 (D x L); sigma_hat is
    the per-coordinate mean squared residual with denominator N-1, floored at
    1e-12. Requires N > L and an invertible response Gram matrix; no D x D
    matrix is formed.
    """
    d = _require_centered(d)
    n, l = d.n, d.n_targets
    if n <= l:
        raise InsufficientSampleError(
            f"need more observations than response coordinates, got N={n}, L={l}"
        )
    yty = d.y.T @ d.y
    yty = (yty + yty.T) / 2.0
    try:
        factor = spd_cholesky(yty, "response Gram matrix Y'Y")
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            "response Gram matrix Y'Y is singular (collinear responses)"
        ) from exc
    gamma = yty / (n - 1)
    slope = cho_solve(factor, d.y.T @ d.x, check_finite=False).T
    residuals = d.x - d.y @ slope.T
    sigma_diag = np.maximum((residuals * residuals).sum(axis=0) / (n - 1), SIGMA_FLOOR)
    return InverseParams(gamma=gamma, slope=slope, sigma_diag=sigma_diag)


def fit_forward(d: Dataset) -> FitResult:
    """Fit the inverse model and map it forward; never inverts a D x D matrix."""
    d = _require_centered(d)
    inverse = fit_inverse(d)
    return FitResult(
        inverse=inverse,
        forward=to_forward(inverse),
        n=d.n,
        yty=d.y.T @ d.y,
        x_means=d.x_means,
        y_means=d.y_means,
    )


def fit_lse(d: Dataset) -> LseFitResult:
    """Classical forward least squares, defined only for N > D.

    slope_star = Y'X (X'X)^-1; residual covariance with denominator N - D;
    gamma_star = X'X / (N-1).
    """
    d = _require_centered(d)
    n, p = d.n, d.n_features
    if n <= p:
        raise UnsupportedDesignError(
            f"forward least squares needs N > D, got N={n}, D={p}"
        )
    xtx = d.x.T @ d.x
    xtx = (xtx + xtx.T) / 2.0
    factor = spd_cholesky(xtx, "predictor Gram matrix X'X")
    slope_star = cho_solve(factor, d.x.T @ d.y, check_finite=False).T
    residuals = d.y - d.x @ slope_star.T
    sigma_star = residuals.T @ residuals / (n - p)
    sigma_star = (sigma_star + sigma_star.T) / 2.0
    forward = ForwardParams(
        gamma_star=xtx / (n - 1), slope_star=slope_star, sigma_star=sigma_star
    )
    return LseFitResult(
        forward=forward, n=n, xtx=xtx, x_means=d.x_means, y_means=d.y_means
    )


# ---------------------------------------------------------------------------
# CSV interchange (comma separated, '.' decimal, optional single header row)
# ---------------------------------------------------------------------------

def _row_is_numeric(row: list[str]) -> bool:
    try:
        [float(c) for c in row]
        return len(row) > 0
    except ValueError:
        return False


def load_matrix_csv(path, header: str = "auto") -> np.ndarray:
    """Load a matrix from CSV, rows = observations.

    header: "auto" detects a non-numeric first row and skips it; "yes" always
    skips the first row; "no" parses every row.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    if header not in ("auto", "yes", "no"):
        raise ValueError(f"header must be auto/yes/no, got {header!r}")
    start = 0
    if header == "yes" or (header == "auto" and not _row_is_numeric(rows[0])):
        start = 1
    if start >= len(rows):
        raise ValueError(f"{path}: no data rows")
    width = len(rows[start])
    data = []
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ValueError(f"{path}: row {i} has {len(row)} cells, expected {width}")
        try:
            data.append([float(c) for c in row])
        except ValueError as exc:
            raise ValueError(f"{path}: row {i} is not numeric: {exc}") from exc
    return np.asarray(data, dtype=float)


def save_matrix_csv(path, m, header: list[str] | None = None) -> None:
    m = as_matrix(m, "m")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in m:
            writer.writerow([repr(float(v)) for v in row])
