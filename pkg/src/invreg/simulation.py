"""Seeded simulation designs, the replication harness, and validation oracles.

Three designs are generated, differing in slope sparsity and response
correlation; the slope amplitude is rescaled so every design sits at a fixed
signal-to-noise ratio. The harness fits each requested method on a fresh
dataset per replication, builds the prediction region at one fresh test
profile, and aggregates coverage, volumes and timing.

Reproducibility: generators are PCG64 streams derived from
SeedSequence(entropy=seed, spawn_key=path). The true parameters of an
experiment use path (0,); replication i uses path (1, i). Results are
therefore bitwise identical across runs and across worker counts, because no
stream is ever shared between replications.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .estimation import Dataset, center, fit_forward, fit_lse
from .exceptions import CalibrationError
from .inference import lse_prediction_region, prediction_region, region_metrics, slope_covariance
from .linalg import spd_cholesky, vec
from .model import InverseParams, snr, to_forward

__all__ = [
    "CaseSpec",
    "ExperimentConfig",
    "MethodMetrics",
    "ExperimentReport",
    "substream",
    "generate_case_params",
    "sample_dataset",
    "sample_pair",
    "run_replication",
    "run_experiment",
    "write_report_csv",
    "validate_slope_covariance",
    "REPORT_COLUMNS",
]

SNR_TOLERANCE = 0.01
BISECTION_ITERATIONS = 40
MAX_CALIBRATION_ATTEMPTS = 10
THREADS_ENV_VAR = "INVREG_THREADS"

METHOD_ORDER = ("IR", "LSE")

REPORT_COLUMNS = [
    "case",
    "L",
    "D",
    "N",
    "method",
    "coverage",
    "coverage_se",
    "volume",
    "normalized_volume",
    "cpu_mean_s",
    "failures",
]


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, path); the determinism backbone."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=path))


@dataclass(frozen=True)
class CaseSpec:
    """One simulation design: case in {1, 2, 3}, dimensions, SNR target, seed.

    Case 1: sparse slope (90% zeros, nonzeros uniform on (-2, 2)), identity
    response covariance. Case 2: same slope, factor-model response covariance
    (strongly correlated responses). Case 3: dense slope with entries uniform
    on [-0.5, 0.5], factor-model response covariance. Noise is identity in
    every case; the slope is rescaled to hit target_snr.
    """

    case: int
    l: int
    d: int
    target_snr: float = 7.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.case not in (1, 2, 3):
            raise ValueError(f"case must be 1, 2 or 3, got {self.case}")
        if self.l < 1 or self.d < 1:
            raise ValueError(f"dimensions must be >= 1, got L={self.l}, D={self.d}")
        if self.target_snr <= 0:
            raise ValueError(f"target_snr must be positive, got {self.target_snr}")


@dataclass(frozen=True)
class ExperimentConfig:
    """A CaseSpec plus sample size, replication count, level and methods."""

    case_spec: CaseSpec
    n: int
    replications: int
    level: float = 0.95
    methods: tuple = ("IR",)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must be in (0, 1), got {self.level}")
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must not be empty")
        for m in methods:
            if m not in METHOD_ORDER:
                raise ValueError(f"unknown method {m!r}, expected subset of {METHOD_ORDER}")
        if "LSE" in methods and self.n <= self.case_spec.d:
            raise ValueError(
                f"LSE requires N > D, got N={self.n}, D={self.case_spec.d}"
            )
        object.__setattr__(self, "methods", methods)

    def to_dict(self) -> dict:
        return {
            "case": self.case_spec.case,
            "L": self.case_spec.l,
            "D": self.case_spec.d,
            "N": self.n,
            "replications": self.replications,
            "level": self.level,
            "methods": list(self.methods),
            "seed": self.case_spec.seed,
            "target_snr": self.case_spec.target_snr,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        required = {"case", "L", "D", "N", "replications", "seed"}
        missing = required - set(d)
        if missing:
            raise ValueError(f"experiment config is missing keys: {sorted(missing)}")
        spec = CaseSpec(
            case=int(d["case"]),
            l=int(d["L"]),
            d=int(d["D"]),
            target_snr=float(d.get("target_snr", 7.5)),
            seed=int(d["seed"]),
        )
        return cls(
            case_spec=spec,
            n=int(d["N"]),
            replications=int(d["replications"]),
            level=float(d.get("level", 0.95)),
            methods=tuple(d.get("methods", ["IR"])),
        )


def _draw_slope(spec: CaseSpec, rng: np.random.Generator) -> np.ndarray:
    total = spec.d * spec.l
    if spec.case in (1, 2):
        # Exactly floor(0.9 * D * L) zero entries at uniformly drawn positions.
        n_zeros = math.floor(0.9 * total)
        flat = rng.uniform(-2.0, 2.0, size=total)
        zero_positions = rng.choice(total, size=n_zeros, replace=False)
        flat[zero_positions] = 0.0
        return flat.reshape(spec.d, spec.l)
    return rng.uniform(-0.5, 0.5, size=(spec.d, spec.l))


def _draw_gamma(spec: CaseSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.case == 1:
        return np.eye(spec.l)
    # Factor model: strongly correlated responses via a thin random loading.
    lam = rng.standard_normal((spec.l, math.ceil(spec.l / 2)))
    return lam @ lam.T + 0.5 * np.eye(spec.l)


def _calibrate_scale(gamma, slope, sigma_diag, target: float) -> float:
    """Bisection on the slope rescale factor until snr hits the target."""

    def snr_at(c: float) -> float:
        p = InverseParams(gamma=gamma, slope=c * slope, sigma_diag=sigma_diag)
        return snr(to_forward(p))

    hi = 1.0
    for _ in range(60):
        if snr_at(hi) >= target:
            break
        hi *= 2.0
    else:
        raise CalibrationError(f"snr target {target} unreachable (slope has no signal)")
    lo = 0.0
    for _ in range(BISECTION_ITERATIONS):
        mid = (lo + hi) / 2.0
        if snr_at(mid) < target:
            lo = mid
        else:
            hi = mid
    c = (lo + hi) / 2.0
    achieved = snr_at(c)
    if abs(achieved - target) > SNR_TOLERANCE:
        raise CalibrationError(
            f"bisection missed the snr target: {achieved} vs {target}"
        )
    return c


def generate_case_params(spec: CaseSpec, rng: np.random.Generator | None = None) -> InverseParams:
    """Draw the design's parameter triple and calibrate it to the SNR target.

    Draw order (fixed for reproducibility): slope, then response covariance.
    If the drawn slope carries no signal the draw is retried on a fresh
    substream, at most MAX_CALIBRATION_ATTEMPTS times.
    """
    if rng is None:
        rng = substream(spec.seed, 0)
    sigma_diag = np.ones(spec.d)
    last_error: CalibrationError | None = None
    for _ in range(MAX_CALIBRATION_ATTEMPTS):
        attempt_rng = rng.spawn(1)[0]
        slope = _draw_slope(spec, attempt_rng)
        gamma = _draw_gamma(spec, attempt_rng)
        try:
            c = _calibrate_scale(gamma, slope, sigma_diag, spec.target_snr)
        except CalibrationError as exc:
            last_error = exc
            continue
        return InverseParams(gamma=gamma, slope=c * slope, sigma_diag=sigma_diag)
    raise CalibrationError(
        f"could not calibrate snr={spec.target_snr} in "
        f"{MAX_CALIBRATION_ATTEMPTS} attempts: {last_error}"
    )


def sample_dataset(p: InverseParams, n: int, rng: np.random.Generator) -> Dataset:
    """Draw n observations from the inverse model (responses first)."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    chol_gamma = np.tril(spd_cholesky(p.gamma, "gamma")[0])
    y = rng.standard_normal((n, p.n_targets)) @ chol_gamma.T
    noise = rng.standard_normal((n, p.n_features)) * np.sqrt(p.sigma_diag)
    x = y @ p.slope.T + noise
    return Dataset(x=x, y=y)


def sample_pair(p: InverseParams, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw one fresh (x, y) observation from the inverse model."""
    chol_gamma = np.tril(spd_cholesky(p.gamma, "gamma")[0])
    y = chol_gamma @ rng.standard_normal(p.n_targets)
    x = p.slope @ y + rng.standard_normal(p.n_features) * np.sqrt(p.sigma_diag)
    return x, y


def run_replication(config: ExperimentConfig, rep_index: int) -> dict:
    """One learning dataset, one test pair, one region per method.

    Returns, per method, whether the test response fell inside its region,
    the region's volume metrics, the wall-clock seconds spent on fit plus
    region construction (data generation excluded), and a failure flag.
    """
    spec = config.case_spec
    params = generate_case_params(spec)
    rng = substream(spec.seed, 1, rep_index)
    data = sample_dataset(params, config.n, rng)
    x_new, y_new = sample_pair(params, rng)
    out: dict = {}
    for method in METHOD_ORDER:
        if method not in config.methods:
            continue
        try:
            start = time.perf_counter()
            if method == "IR":
                fit = fit_forward(center(data))
                region = prediction_region(fit, x_new, config.level)
            else:
                fit = fit_lse(center(data))
                region = lse_prediction_region(fit, x_new, config.level)
            elapsed = time.perf_counter() - start
            metrics = region_metrics(region)
            out[method] = {
                "covered": bool(region.contains(y_new)),
                "volume": metrics["volume"],
                "normalized_volume": metrics["normalized_volume"],
                "cpu_s": elapsed,
                "failed": False,
            }
        except Exception as exc:  # noqa: BLE001 - per-replication failures are data
            out[method] = {
                "covered": None,
                "volume": None,
                "normalized_volume": None,
                "cpu_s": None,
                "failed": True,
                "error": f"{type(exc).__name__}: {exc}",
            }
    return out


@dataclass
class MethodMetrics:
    """Aggregated per-method metrics of one experiment."""

    method: str
    coverage: float
    coverage_se: float
    volume: float
    normalized_volume: float
    cpu_mean_s: float
    failures: int


@dataclass
class ExperimentReport:
    """Config echo plus aggregated metrics, one entry per method."""

    config: ExperimentConfig
    metrics: list[MethodMetrics] = field(default_factory=list)

    def for_method(self, method: str) -> MethodMetrics:
        for m in self.metrics:
            if m.method == method:
                return m
        raise KeyError(f"no metrics for method {method!r}")


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ValueError(f"{THREADS_ENV_VAR} must be >= 1, got {n}")
    return n


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all replications and aggregate.

    Replications execute in a worker pool capped by INVREG_THREADS (default:
    available parallelism); results are reduced in replication order, so the
    report does not depend on the worker count.
    """
    n_jobs = min(_worker_count(), config.replications)
    if n_jobs > 1:
        results = Parallel(n_jobs=n_jobs)(
            delayed(run_replication)(config, i) for i in range(config.replications)
        )
    else:
        results = [run_replication(config, i) for i in range(config.replications)]
    report = ExperimentReport(config=config)
    for method in METHOD_ORDER:
        if method not in config.methods:
            continue
        rows = [r[method] for r in results]
        ok = [r for r in rows if not r["failed"]]
        failures = len(rows) - len(ok)
        if not ok:
            report.metrics.append(
                MethodMetrics(
                    method=method,
                    coverage=float("nan"),
                    coverage_se=float("nan"),
                    volume=float("nan"),
                    normalized_volume=float("nan"),
                    cpu_mean_s=float("nan"),
                    failures=failures,
                )
            )
            continue
        covered = np.array([float(r["covered"]) for r in ok])
        coverage = float(covered.mean())
        coverage_se = float(np.sqrt(coverage * (1.0 - coverage) / covered.size))
        report.metrics.append(
            MethodMetrics(
                method=method,
                coverage=coverage,
                coverage_se=coverage_se,
                volume=float(np.mean([r["volume"] for r in ok])),
                normalized_volume=float(np.mean([r["normalized_volume"] for r in ok])),
                cpu_mean_s=float(np.mean([r["cpu_s"] for r in ok])),
                failures=failures,
            )
        )
    return report


def write_report_csv(report: ExperimentReport, path, *, reproducible: bool = False) -> None:
    """Write one CSV row per method.

    Under ``reproducible`` the wall-clock column is written as 0.0, making
    the file byte-identical across runs; everything else is deterministic
    already.
    """
    cfg = report.config
    spec = cfg.case_spec
    lines = [",".join(REPORT_COLUMNS)]
    for m in report.metrics:
        cpu = 0.0 if reproducible else m.cpu_mean_s
        cells = [
            str(spec.case),
            str(spec.l),
            str(spec.d),
            str(cfg.n),
            m.method,
            repr(float(m.coverage)),
            repr(float(m.coverage_se)),
            repr(float(m.volume)),
            repr(float(m.normalized_volume)),
            repr(float(cpu)),
            str(m.failures),
        ]
        lines.append(",".join(cells))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def validate_slope_covariance(
    p: InverseParams, n: int, replications: int, rng: np.random.Generator
) -> dict:
    """Brute-force replication oracle for the slope covariance.

    Holds one response draw fixed, regenerates the predictors from the true
    parameters, refits the inverse slope by raw least squares each time, maps
    it forward with the true covariances, and compares the empirical
    covariance of vec(slope_star_hat) to the closed form at (p, Y'Y).
    Intended for small D*L.
    """
    if replications < 2:
        raise ValueError("replications must be >= 2")
    l, d = p.n_targets, p.n_features
    chol_gamma = np.tril(spd_cholesky(p.gamma, "gamma")[0])
    y = rng.standard_normal((n, l)) @ chol_gamma.T
    yty = y.T @ y
    yty = (yty + yty.T) / 2.0
    # a_hat = X' Y (Y'Y)^-1 = X' proj, with proj fixed across replications.
    proj = np.linalg.solve(yty, y.T).T
    sqrt_sigma = np.sqrt(p.sigma_diag)
    draws = np.empty((replications, d * l))
    for r in range(replications):
        x = y @ p.slope.T + rng.standard_normal((n, d)) * sqrt_sigma
        a_hat = x.T @ proj
        f_hat = to_forward(InverseParams(gamma=p.gamma, slope=a_hat, sigma_diag=p.sigma_diag))
        draws[r] = vec(f_hat.slope_star)
    empirical = np.cov(draws, rowvar=False).reshape(d * l, d * l)
    closed_form = slope_covariance(p, yty).matrix
    err = float(
        np.linalg.norm(empirical - closed_form) / np.linalg.norm(closed_form)
    )
    return {"rel_frobenius_error": err}


def response_correlation_strength(spec: CaseSpec, draws: int = 50) -> float:
    """Mean (over draws) of the max absolute off-diagonal response correlation.

    Quantifies the factor model's "strong dependence" claim; only meaningful
    for L >= 2.
    """
    if spec.l < 2:
        raise ValueError("correlation strength needs L >= 2")
    rng = substream(spec.seed, 2)
    vals = []
    for _ in range(draws):
        gamma = _draw_gamma(spec, rng)
        dinv = 1.0 / np.sqrt(np.diag(gamma))
        corr = gamma * dinv[:, None] * dinv[None, :]
        off = np.abs(corr[~np.eye(spec.l, dtype=bool)])
        vals.append(float(off.max()))
    return float(np.mean(vals))
