"""Command-line front end.

Subcommands: fit (CSV in, model JSON out), predict (model + profiles in,
regions JSON out), simulate (experiment JSON in, report CSV out), validate
(run a named oracle suite). Exit codes: 0 success, 1 oracle failure,
2 input error, 3 numerical singularity.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys

import numpy as np

from . import estimation, inference, simulation, univariate
from .exceptions import CalibrationError, SingularMatrixError, UnsupportedDesignError
from .model import involution_residual, snr, InverseParams
from .simulation import CaseSpec, ExperimentConfig, substream

EXIT_OK = 0
EXIT_ORACLE_FAIL = 1
EXIT_INPUT_ERROR = 2
EXIT_SINGULAR = 3


def _write_json(path: str, payload: dict, reproducible: bool) -> None:
    if not reproducible:
        payload = dict(payload)
        payload["created_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def _cmd_fit(args: argparse.Namespace) -> int:
    x = estimation.load_matrix_csv(args.x, header=args.header)
    y = estimation.load_matrix_csv(args.y, header=args.header)
    if x.shape[0] != y.shape[0]:
        raise ValueError(
            f"row count mismatch: {args.x} has {x.shape[0]} rows, "
            f"{args.y} has {y.shape[0]} rows"
        )
    data = estimation.Dataset(x=x, y=y)
    data = data.assume_centered() if args.no_center else data.center()
    fit = estimation.fit_forward(data)
    _write_json(args.out, fit.to_dict(), args.reproducible)
    print(
        f"N={fit.n} D={fit.n_features} L={fit.n_targets} "
        f"SNR={snr(fit.forward):.6g}"
    )
    return EXIT_OK


def _cmd_predict(args: argparse.Namespace) -> int:
    with open(args.model) as fh:
        fit = estimation.FitResult.from_dict(json.load(fh))
    profiles = estimation.load_matrix_csv(args.x_new, header=args.header)
    if profiles.shape[1] != fit.n_features:
        raise ValueError(
            f"{args.x_new} has {profiles.shape[1]} columns, "
            f"the model expects {fit.n_features}"
        )
    cov = inference.slope_covariance(fit.inverse, fit.yty, n=fit.n, forward=fit.forward)
    regions = [
        inference.prediction_region(fit, row, args.level, covariance=cov).to_dict()
        for row in profiles
    ]
    _write_json(args.out, {"level": args.level, "regions": regions}, args.reproducible)
    print(f"wrote {len(regions)} region(s) at level {args.level}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    with open(args.config) as fh:
        config = ExperimentConfig.from_dict(json.load(fh))
    report = simulation.run_experiment(config)
    simulation.write_report_csv(report, args.out, reproducible=args.reproducible)
    for m in report.metrics:
        print(
            f"case={config.case_spec.case} L={config.case_spec.l} "
            f"D={config.case_spec.d} N={config.n} method={m.method} "
            f"coverage={m.coverage:.4f} failures={m.failures}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# validation suites
# ---------------------------------------------------------------------------

def _suite_involution(seed: int) -> tuple[bool, str]:
    rng = substream(seed, 10)
    worst = 0.0
    combos = [(l, d) for l in (1, 2, 5) for d in (2, 5, 20, 100)]
    count = 0
    while count < 200:
        l, d = combos[count % len(combos)]
        lam = rng.standard_normal((l, l))
        gamma = lam @ lam.T + 0.5 * np.eye(l)
        p = InverseParams(
            gamma=gamma,
            slope=rng.uniform(-1.0, 1.0, size=(d, l)),
            sigma_diag=rng.uniform(0.5, 2.0, size=d),
        )
        worst = max(worst, involution_residual(p))
        count += 1
    passed = worst <= 1e-8
    return passed, f"involution: max residual {worst:.3e} (threshold 1e-8)"


def _suite_theta_oracle(seed: int) -> tuple[bool, str]:
    rng = substream(seed, 11)
    l, d = 2, 5
    lam = rng.standard_normal((l, l))
    p = InverseParams(
        gamma=lam @ lam.T + 0.5 * np.eye(l),
        slope=rng.uniform(-1.0, 1.0, size=(d, l)),
        sigma_diag=rng.uniform(0.5, 2.0, size=d),
    )
    res = simulation.validate_slope_covariance(p, n=2000, replications=5000, rng=rng)
    err = res["rel_frobenius_error"]
    passed = err <= 0.15
    return passed, f"theta-oracle: rel frobenius {err:.4f} (threshold 0.15)"


def _suite_uni_cross(seed: int) -> tuple[bool, str]:
    rng = substream(seed, 12)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 9))
        n = 120
        p = InverseParams(
            gamma=np.array([[float(rng.uniform(0.5, 2.0))]]),
            slope=rng.uniform(-1.0, 1.0, size=(d, 1)),
            sigma_diag=rng.uniform(0.5, 2.0, size=d),
        )
        data = simulation.sample_dataset(p, n, rng)
        fit = estimation.fit_forward(estimation.center(data))
        x_new = rng.standard_normal(d)
        multi = inference.prediction_region(fit, x_new, 0.95)
        uni = univariate.prediction_interval(fit, x_new, 0.95)
        half_multi = float(
            np.sqrt(multi.ellipsoid.shape[0, 0] * multi.ellipsoid.radius2)
        )
        worst = max(worst, abs(multi.center[0] - uni.center))
        worst = max(worst, abs(half_multi - uni.half_width))
        candidate = fit.forward.slope_star[0] + rng.standard_normal(d) * 0.05
        stat_multi = inference.confidence_region(fit, 0.95).statistic(
            candidate.reshape(1, d)
        )
        stat_uni = univariate.confidence_statistic(fit, candidate)
        worst = max(worst, abs(stat_multi - stat_uni) / max(abs(stat_uni), 1.0))
    passed = worst <= 1e-8
    return passed, f"uni-cross: max deviation {worst:.3e} (threshold 1e-8)"


def _suite_coverage(seed: int) -> tuple[bool, str]:
    spec = CaseSpec(case=1, l=2, d=10, seed=seed)
    config = ExperimentConfig(case_spec=spec, n=300, replications=400, level=0.95)
    report = simulation.run_experiment(config)
    m = report.for_method("IR")
    passed = abs(m.coverage - 0.95) <= 0.04 and m.failures == 0
    return passed, (
        f"coverage: {m.coverage:.4f} at level 0.95 "
        f"(tolerance 0.04, failures {m.failures})"
    )


_SUITES = {
    "involution": _suite_involution,
    "theta-oracle": _suite_theta_oracle,
    "uni-cross": _suite_uni_cross,
    "coverage": _suite_coverage,
}


def _cmd_validate(args: argparse.Namespace) -> int:
    passed, message = _SUITES[args.suite](args.seed)
    print(f"{'PASS' if passed else 'FAIL'} {message}")
    return EXIT_OK if passed else EXIT_ORACLE_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invreg",
        description="Inverse regression with prediction ellipsoids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model from x/y CSV files")
    p_fit.add_argument("--x", required=True, help="predictor CSV, rows = observations")
    p_fit.add_argument("--y", required=True, help="response CSV, rows = observations")
    p_fit.add_argument("--out", required=True, help="output model JSON path")
    p_fit.add_argument(
        "--no-center", action="store_true",
        help="treat the data as already centered",
    )
    p_fit.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p_fit.add_argument(
        "--reproducible", action="store_true", help="omit the timestamp field"
    )
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="prediction regions for new profiles")
    p_pred.add_argument("--model", required=True, help="model JSON from fit")
    p_pred.add_argument("--x-new", required=True, help="profiles CSV, one row per region")
    p_pred.add_argument("--level", type=float, default=0.95)
    p_pred.add_argument("--out", required=True, help="output regions JSON path")
    p_pred.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p_pred.add_argument(
        "--reproducible", action="store_true", help="omit the timestamp field"
    )
    p_pred.set_defaults(func=_cmd_predict)

    p_sim = sub.add_parser("simulate", help="run a seeded experiment sweep cell")
    p_sim.add_argument("--config", required=True, help="experiment config JSON")
    p_sim.add_argument("--out", required=True, help="output report CSV path")
    p_sim.add_argument(
        "--reproducible", action="store_true",
        help="zero the wall-clock column so the report is byte-stable",
    )
    p_sim.set_defaults(func=_cmd_simulate)

    p_val = sub.add_parser("validate", help="run a named oracle suite")
    p_val.add_argument("--suite", required=True, choices=sorted(_SUITES))
    p_val.add_argument("--seed", type=int, default=0)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SingularMatrixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_FAIL
    except (UnsupportedDesignError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
