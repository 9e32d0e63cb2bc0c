"""Estimator front end in the scikit-learn style.

Thin stateful wrappers over the functional core: ``fit`` validates and
centers the data and stores the fit, ``predict`` returns point predictions,
and the region constructors hand back ellipsoids. Hyperparameters live in
``__init__`` only, so ``get_params`` / ``set_params`` / ``clone`` behave as
scikit-learn expects.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import estimation, inference
from .model import snr
from .validation import as_matrix

__all__ = ["InverseRegression", "LeastSquaresRegression"]


def _build_dataset(x, y, center: bool) -> estimation.Dataset:
    x = as_matrix(x, "X")
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    data = estimation.Dataset(x=x, y=as_matrix(y, "Y"))
    return data.center() if center else data.assume_centered()


class InverseRegression(BaseEstimator):
    """Multivariate regression fitted through the inverse model.

    Regresses X on Y (an L x L problem), then maps the estimates to the
    forward regression of Y on X. Works for D >> N designs where classical
    least squares is undefined.

    Parameters
    ----------
    center : bool, default=True
        Remove column means before fitting; training means are reapplied at
        prediction time. Disable only for data known to be centered.
    level : float, default=0.95
        Default confidence level for regions.
    """

    def __init__(self, center: bool = True, level: float = 0.95):
        self.center = center
        self.level = level

    def fit(self, X, Y) -> "InverseRegression":
        data = _build_dataset(X, Y, self.center)
        self.result_ = estimation.fit_forward(data)
        self.n_features_in_ = data.n_features
        self.n_targets_ = data.n_targets
        return self

    def _check_fitted(self) -> estimation.FitResult:
        if not hasattr(self, "result_"):
            raise RuntimeError("estimator is not fitted; call fit(X, Y) first")
        return self.result_

    def predict(self, X) -> np.ndarray:
        fit = self._check_fitted()
        x = as_matrix(X, "X")
        if x.shape[1] != fit.n_features:
            raise ValueError(
                f"X has {x.shape[1]} columns, the fit used {fit.n_features}"
            )
        centered = x - fit.x_means
        return centered @ fit.forward.slope_star.T + fit.y_means

    def prediction_region(self, x_new, level: float | None = None) -> inference.PredictionRegion:
        fit = self._check_fitted()
        return inference.prediction_region(
            fit, x_new, self.level if level is None else level
        )

    def prediction_regions(self, X_new, level: float | None = None) -> list:
        """One region per row of X_new, sharing one slope-covariance assembly."""
        fit = self._check_fitted()
        x = as_matrix(X_new, "X_new")
        cov = inference.slope_covariance(
            fit.inverse, fit.yty, n=fit.n, forward=fit.forward
        )
        lvl = self.level if level is None else level
        return [
            inference.prediction_region(fit, row, lvl, covariance=cov) for row in x
        ]

    def confidence_region(self, level: float | None = None) -> inference.ConfidenceRegion:
        fit = self._check_fitted()
        return inference.confidence_region(fit, self.level if level is None else level)

    def snr_(self) -> float:
        """Signal-to-noise ratio of the fitted forward model."""
        return snr(self._check_fitted().forward)


class LeastSquaresRegression(BaseEstimator):
    """Classical forward least squares baseline (requires N > D)."""

    def __init__(self, center: bool = True, level: float = 0.95):
        self.center = center
        self.level = level

    def fit(self, X, Y) -> "LeastSquaresRegression":
        data = _build_dataset(X, Y, self.center)
        self.result_ = estimation.fit_lse(data)
        self.n_features_in_ = data.n_features
        self.n_targets_ = data.n_targets
        return self

    def _check_fitted(self) -> estimation.LseFitResult:
        if not hasattr(self, "result_"):
            raise RuntimeError("estimator is not fitted; call fit(X, Y) first")
        return self.result_

    def predict(self, X) -> np.ndarray:
        fit = self._check_fitted()
        x = as_matrix(X, "X")
        if x.shape[1] != fit.n_features:
            raise ValueError(
                f"X has {x.shape[1]} columns, the fit used {fit.n_features}"
            )
        centered = x - fit.x_means
        return centered @ fit.forward.slope_star.T + fit.y_means

    def prediction_region(self, x_new, level: float | None = None) -> inference.PredictionRegion:
        fit = self._check_fitted()
        return inference.lse_prediction_region(
            fit, x_new, self.level if level is None else level
        )
