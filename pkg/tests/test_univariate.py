"""Scalar-response path and its agreement with the matrix machinery at L = 1.

The scalar module is an independent implementation (explicit gradient, no
Kronecker products), so the tests here lean on cross-module equality: same
covariance, same interval, same confidence statistic as the multivariate
path specialized to one response. Hand values pin the closed forms.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invreg import univariate as uni
from invreg.estimation import Dataset, center, fit_forward
from invreg.inference import (
    confidence_region,
    prediction_region,
    region_metrics,
    slope_covariance,
)
from invreg.model import InverseParams


def _uni_fit(seed: int, n: int = 200, d: int = 4):
    rng = np.random.default_rng(seed)
    slope = rng.uniform(-1.0, 1.0, size=(d, 1))
    sigma = rng.uniform(0.5, 2.0, size=d)
    y = rng.standard_normal((n, 1))
    x = y @ slope.T + rng.standard_normal((n, d)) * np.sqrt(sigma)
    return fit_forward(center(Dataset(x=x, y=y)))


# closed forms


def test_scalar_hand_case() -> None:
    p = uni.make_uni_params(gamma=1.0, slope=[2.0], sigma_diag=[1.0])
    assert p.s_star == pytest.approx(0.2, abs=1e-15)
    assert p.slope_star[0] == pytest.approx(0.4, abs=1e-15)


def test_two_feature_hand_case() -> None:
    # 1/s* = 1/2 + (1/1 + 1/2) = 2, slope_star = s* slope / sigma
    p = uni.make_uni_params(gamma=2.0, slope=[1.0, -1.0], sigma_diag=[1.0, 2.0])
    assert p.s_star == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(p.slope_star, [0.5, -0.25], atol=1e-15)


def test_uni_params_rejects_inconsistent_s_star() -> None:
    with pytest.raises(ValueError, match="inconsistent"):
        uni.UniParams(gamma=1.0, slope=np.array([2.0]), sigma_diag=np.array([1.0]), s_star=0.3)


def test_from_inverse_requires_single_target() -> None:
    p = InverseParams(
        gamma=np.eye(2), slope=np.ones((3, 2)), sigma_diag=np.ones(3)
    )
    with pytest.raises(ValueError, match="L = 1"):
        uni.from_inverse(p)


def test_gradient_matches_finite_differences() -> None:
    rng = np.random.default_rng(3)
    p = uni.make_uni_params(
        gamma=1.3, slope=rng.uniform(-1.0, 1.0, size=5), sigma_diag=rng.uniform(0.5, 2.0, size=5)
    )
    grad = uni.slope_gradient(p)
    eps = 1e-7
    for j in range(5):
        bumped = np.array(p.slope)
        bumped[j] += eps
        fd = (uni.make_uni_params(1.3, bumped, p.sigma_diag).slope_star - p.slope_star) / eps
        np.testing.assert_allclose(grad[j], fd, rtol=1e-5, atol=1e-8)


# cross-module agreement


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_covariance_matches_multivariate_at_single_target(seed: int) -> None:
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    p = InverseParams(
        gamma=np.array([[float(rng.uniform(0.5, 2.0))]]),
        slope=rng.uniform(-1.0, 1.0, size=(d, 1)),
        sigma_diag=rng.uniform(0.5, 2.0, size=d),
    )
    yty = float(rng.uniform(20.0, 2000.0))
    matrix_cov = slope_covariance(p, np.array([[yty]])).matrix
    scalar_cov = uni.slope_covariance(uni.from_inverse(p), yty)
    np.testing.assert_allclose(scalar_cov, matrix_cov, rtol=0, atol=1e-10)


def test_interval_matches_multivariate_region() -> None:
    fit = _uni_fit(11)
    rng = np.random.default_rng(12)
    x_new = rng.uniform(-2.0, 2.0, size=4)
    interval = uni.prediction_interval(fit, x_new, level=0.95)
    region = prediction_region(fit, x_new, level=0.95)
    assert interval.center == pytest.approx(region.ellipsoid.center[0], abs=1e-10)
    assert interval.variance == pytest.approx(region.ellipsoid.shape[0, 0], abs=1e-10)
    assert interval.radius2 == pytest.approx(region.ellipsoid.radius2, abs=1e-12)
    assert interval.volume() == pytest.approx(region_metrics(region)["volume"], abs=1e-10)


def test_confidence_statistic_matches_multivariate() -> None:
    fit = _uni_fit(13)
    rng = np.random.default_rng(14)
    candidate = fit.forward.slope_star[0] + 0.01 * rng.standard_normal(4)
    scalar_stat = uni.confidence_statistic(fit, candidate)
    region_stat = confidence_region(fit, 0.95).statistic(candidate.reshape(1, 4))
    assert scalar_stat == pytest.approx(region_stat, abs=1e-8)
    assert scalar_stat > 0.0


def test_confidence_statistic_zero_at_fitted_slope() -> None:
    fit = _uni_fit(15)
    assert uni.confidence_statistic(fit, fit.forward.slope_star) == pytest.approx(0.0, abs=1e-12)


# interval geometry


def test_interval_geometry() -> None:
    interval = uni.PredictionInterval(center=1.0, variance=4.0, level=0.95)
    hw = interval.half_width
    assert hw == pytest.approx(2.0 * 1.959963984540054, rel=1e-12)
    assert interval.lower == pytest.approx(1.0 - hw)
    assert interval.upper == pytest.approx(1.0 + hw)
    assert interval.volume() == pytest.approx(2.0 * hw)
    assert interval.contains(interval.upper - 1e-9)
    assert not interval.contains(interval.upper + 1e-9)
    d = interval.to_dict()
    assert d["center"] == [1.0]
    assert d["shape"] == [[4.0]]
    assert d["volume"] == pytest.approx(2.0 * hw)


def test_interval_rejects_bad_inputs() -> None:
    with pytest.raises(ValueError, match="variance"):
        uni.PredictionInterval(center=0.0, variance=0.0, level=0.95)
    fit = _uni_fit(16)
    with pytest.raises(ValueError, match="level"):
        uni.prediction_interval(fit, np.zeros(4), level=1.0)


def test_multi_target_fit_rejected() -> None:
    rng = np.random.default_rng(17)
    y = rng.standard_normal((50, 2))
    x = rng.standard_normal((50, 3))
    fit = fit_forward(center(Dataset(x=x, y=y)))
    with pytest.raises(ValueError, match="L = 1"):
        uni.prediction_interval(fit, np.zeros(3))
