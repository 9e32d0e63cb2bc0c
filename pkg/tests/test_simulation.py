"""Seeded study designs, replication engine, and the covariance oracle.

Determinism is the load-bearing property here: parameter draws, datasets and
reports must depend only on (seed, path) substreams, never on the worker
count. The covariance oracle test is a small version of the brute-force
replication check used to validate the closed form.
"""

from __future__ import annotations

import numpy as np
import pytest

from invreg.model import snr, to_forward
from invreg.simulation import (
    REPORT_COLUMNS,
    CaseSpec,
    ExperimentConfig,
    generate_case_params,
    response_correlation_strength,
    run_experiment,
    run_replication,
    sample_dataset,
    substream,
    validate_slope_covariance,
    write_report_csv,
)


def _config(reps: int = 6, methods=("IR",), n: int = 60) -> ExperimentConfig:
    return ExperimentConfig(
        case_spec=CaseSpec(case=1, l=2, d=5, target_snr=7.5, seed=3),
        n=n,
        replications=reps,
        methods=methods,
    )


# case designs


@pytest.mark.parametrize("case", [1, 2, 3])
def test_snr_calibrated_to_target(case: int) -> None:
    spec = CaseSpec(case=case, l=2, d=8, target_snr=7.5, seed=3)
    p = generate_case_params(spec)
    assert snr(to_forward(p)) == pytest.approx(7.5, abs=0.01)


def test_snr_honors_custom_target() -> None:
    p = generate_case_params(CaseSpec(case=1, l=2, d=8, target_snr=5.0, seed=3))
    assert snr(to_forward(p)) == pytest.approx(5.0, abs=0.01)


def test_sparse_case_structure() -> None:
    # Case 1: identity response covariance, unit noise, 90% zero slope.
    spec = CaseSpec(case=1, l=2, d=10, target_snr=7.5, seed=0)
    p = generate_case_params(spec)
    np.testing.assert_array_equal(p.gamma, np.eye(2))
    np.testing.assert_array_equal(p.sigma_diag, np.ones(10))
    assert np.count_nonzero(p.slope) == 20 - 18


def test_dense_case_structure() -> None:
    p = generate_case_params(CaseSpec(case=3, l=2, d=8, target_snr=7.5, seed=3))
    assert np.count_nonzero(p.slope) == 16


def test_correlated_responses_are_strongly_correlated() -> None:
    strength = response_correlation_strength(CaseSpec(case=2, l=3, d=4, seed=1))
    assert strength >= 0.3


def test_correlation_strength_needs_two_targets() -> None:
    with pytest.raises(ValueError, match="L >= 2"):
        response_correlation_strength(CaseSpec(case=2, l=1, d=4, seed=1))


# determinism


def test_substream_is_reproducible_and_path_dependent() -> None:
    a = substream(7, 1, 4).standard_normal(5)
    b = substream(7, 1, 4).standard_normal(5)
    c = substream(7, 1, 5).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_dataset_depends_only_on_stream() -> None:
    p = generate_case_params(CaseSpec(case=1, l=2, d=5, target_snr=7.5, seed=3))
    d1 = sample_dataset(p, 40, substream(3, 1, 0))
    d2 = sample_dataset(p, 40, substream(3, 1, 0))
    d3 = sample_dataset(p, 40, substream(3, 1, 1))
    np.testing.assert_array_equal(d1.x, d2.x)
    np.testing.assert_array_equal(d1.y, d2.y)
    assert not np.array_equal(d1.x, d3.x)


def test_replication_deterministic_and_shaped() -> None:
    config = _config(methods=("IR", "LSE"))
    r1 = run_replication(config, 0)
    r2 = run_replication(config, 0)
    assert set(r1) == {"IR", "LSE"}
    for method in ("IR", "LSE"):
        row = r1[method]
        assert set(row) == {"covered", "volume", "normalized_volume", "cpu_s", "failed"}
        assert row["failed"] is False
        assert isinstance(row["covered"], bool)
        # everything except wall-clock is reproducible
        assert row["covered"] == r2[method]["covered"]
        assert row["volume"] == r2[method]["volume"]


def test_report_independent_of_worker_count(monkeypatch, tmp_path) -> None:
    config = _config(reps=8)
    paths = []
    for workers in ("1", "4"):
        monkeypatch.setenv("INVREG_THREADS", workers)
        report = run_experiment(config)
        path = tmp_path / f"report_{workers}.csv"
        write_report_csv(report, path, reproducible=True)
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]


def test_worker_count_validation(monkeypatch) -> None:
    monkeypatch.setenv("INVREG_THREADS", "zero")
    with pytest.raises(ValueError, match="INVREG_THREADS"):
        run_experiment(_config(reps=2))


# reports


def test_report_csv_format(tmp_path) -> None:
    report = run_experiment(_config(reps=4, methods=("IR", "LSE")))
    path = tmp_path / "report.csv"
    write_report_csv(report, path, reproducible=True)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert len(lines) == 3
    ir_cells = lines[1].split(",")
    assert ir_cells[:5] == ["1", "2", "5", "60", "IR"]
    assert ir_cells[9] == "0.0"
    assert ir_cells[10] == "0"
    # coverage is a proportion of the non-failed replications
    assert 0.0 <= float(ir_cells[5]) <= 1.0


def test_report_csv_keeps_wall_clock_without_reproducible(tmp_path) -> None:
    report = run_experiment(_config(reps=3))
    path = tmp_path / "report.csv"
    write_report_csv(report, path)
    cpu = float(path.read_text().strip().split("\n")[1].split(",")[9])
    assert cpu > 0.0


def test_report_lookup_by_method() -> None:
    report = run_experiment(_config(reps=3))
    assert report.for_method("IR").method == "IR"
    with pytest.raises(KeyError, match="LSE"):
        report.for_method("LSE")


# config


def test_config_roundtrips_through_dict() -> None:
    config = _config(reps=5, methods=("IR", "LSE"))
    again = ExperimentConfig.from_dict(config.to_dict())
    assert again == config


def test_config_rejects_bad_inputs() -> None:
    spec = CaseSpec(case=1, l=2, d=5, target_snr=7.5, seed=0)
    with pytest.raises(ValueError, match="N > D"):
        ExperimentConfig(case_spec=spec, n=4, replications=2, methods=("IR", "LSE"))
    with pytest.raises(ValueError, match="unknown method"):
        ExperimentConfig(case_spec=spec, n=50, replications=2, methods=("GLS",))
    with pytest.raises(ValueError, match="missing keys"):
        ExperimentConfig.from_dict({"case": 1, "L": 2})
    with pytest.raises(ValueError, match="case"):
        CaseSpec(case=4, l=2, d=5)


# covariance oracle


def test_slope_covariance_oracle_small() -> None:
    p = generate_case_params(CaseSpec(case=1, l=2, d=3, target_snr=6.0, seed=5))
    out = validate_slope_covariance(p, 400, 1500, substream(9, 4))
    assert out["rel_frobenius_error"] < 0.25


def test_slope_covariance_oracle_needs_replications() -> None:
    p = generate_case_params(CaseSpec(case=1, l=2, d=3, target_snr=6.0, seed=5))
    with pytest.raises(ValueError, match="replications"):
        validate_slope_covariance(p, 400, 1, substream(9, 4))
