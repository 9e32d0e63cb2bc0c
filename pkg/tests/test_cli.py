"""Command-line round trips, exit codes, and byte-stable outputs.

Everything runs in-process through main(argv) against temp files; no
subprocesses, so coverage and debuggers see the command paths.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from invreg.cli import EXIT_INPUT_ERROR, EXIT_OK, EXIT_SINGULAR, main


def _write_csv(path, array) -> None:
    np.savetxt(path, np.asarray(array), delimiter=",", fmt="%.17g")


@pytest.fixture()
def training_files(tmp_path):
    rng = np.random.default_rng(42)
    y = rng.standard_normal((60, 2))
    x = y @ rng.uniform(-1.0, 1.0, size=(5, 2)).T + rng.standard_normal((60, 5))
    x_path, y_path = tmp_path / "x.csv", tmp_path / "y.csv"
    _write_csv(x_path, x)
    _write_csv(y_path, y)
    return x_path, y_path


def test_fit_then_predict_roundtrip(tmp_path, training_files, capsys) -> None:
    x_path, y_path = training_files
    model = tmp_path / "model.json"
    code = main([
        "fit", "--x", str(x_path), "--y", str(y_path), "--out", str(model),
    ])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "N=60 D=5 L=2" in out

    payload = json.loads(model.read_text())
    for key in ("slope", "slope_star", "n", "yty", "x_means", "y_means", "created_at"):
        assert key in payload

    profiles = tmp_path / "profiles.csv"
    _write_csv(profiles, np.zeros((3, 5)))
    regions_path = tmp_path / "regions.json"
    code = main([
        "predict", "--model", str(model), "--x-new", str(profiles),
        "--level", "0.9", "--out", str(regions_path),
    ])
    assert code == EXIT_OK
    regions = json.loads(regions_path.read_text())
    assert regions["level"] == 0.9
    assert len(regions["regions"]) == 3
    first = regions["regions"][0]
    for key in ("center", "shape", "radius2", "level", "volume", "normalized_volume"):
        assert key in first
    assert len(first["center"]) == 2


def test_reproducible_outputs_are_byte_identical(tmp_path, training_files) -> None:
    x_path, y_path = training_files
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (out_a, out_b):
        assert main([
            "fit", "--x", str(x_path), "--y", str(y_path),
            "--out", str(out), "--reproducible",
        ]) == EXIT_OK
    assert out_a.read_bytes() == out_b.read_bytes()
    assert "created_at" not in json.loads(out_a.read_text())


def test_fit_rejects_row_mismatch(tmp_path, training_files, capsys) -> None:
    x_path, y_path = training_files
    short_y = tmp_path / "short_y.csv"
    _write_csv(short_y, np.loadtxt(y_path, delimiter=",")[:-1])
    code = main([
        "fit", "--x", str(x_path), "--y", str(short_y), "--out", str(tmp_path / "m.json"),
    ])
    assert code == EXIT_INPUT_ERROR
    assert "row count mismatch" in capsys.readouterr().err


def test_fit_rejects_missing_file(tmp_path) -> None:
    code = main([
        "fit", "--x", str(tmp_path / "nope.csv"), "--y", str(tmp_path / "nope.csv"),
        "--out", str(tmp_path / "m.json"),
    ])
    assert code == EXIT_INPUT_ERROR


def test_fit_exits_singular_on_collinear_responses(tmp_path) -> None:
    rng = np.random.default_rng(1)
    y_col = rng.standard_normal(30)
    y = np.column_stack([y_col, y_col])
    x = rng.standard_normal((30, 4))
    x_path, y_path = tmp_path / "x.csv", tmp_path / "y.csv"
    _write_csv(x_path, x)
    _write_csv(y_path, y)
    code = main([
        "fit", "--x", str(x_path), "--y", str(y_path), "--out", str(tmp_path / "m.json"),
    ])
    assert code == EXIT_SINGULAR


def test_predict_rejects_bad_model_json(tmp_path, training_files) -> None:
    x_path, _ = training_files
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main([
        "predict", "--model", str(bad), "--x-new", str(x_path),
        "--out", str(tmp_path / "r.json"),
    ])
    assert code == EXIT_INPUT_ERROR


def test_predict_rejects_profile_width_mismatch(tmp_path, training_files) -> None:
    x_path, y_path = training_files
    model = tmp_path / "model.json"
    main(["fit", "--x", str(x_path), "--y", str(y_path), "--out", str(model)])
    narrow = tmp_path / "narrow.csv"
    _write_csv(narrow, np.zeros((2, 3)))
    code = main([
        "predict", "--model", str(model), "--x-new", str(narrow),
        "--out", str(tmp_path / "r.json"),
    ])
    assert code == EXIT_INPUT_ERROR


def test_simulate_is_thread_count_invariant(tmp_path, monkeypatch, capsys) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "case": 1, "L": 2, "D": 5, "N": 60, "replications": 8,
        "seed": 11, "methods": ["IR", "LSE"],
    }))
    reports = []
    for workers in ("1", "4"):
        monkeypatch.setenv("INVREG_THREADS", workers)
        out = tmp_path / f"report_{workers}.csv"
        code = main([
            "simulate", "--config", str(config), "--out", str(out), "--reproducible",
        ])
        assert code == EXIT_OK
        reports.append(out.read_bytes())
    assert reports[0] == reports[1]
    assert "method=IR coverage=" in capsys.readouterr().out


def test_simulate_rejects_bad_config(tmp_path) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"case": 1, "L": 2}))
    code = main([
        "simulate", "--config", str(config), "--out", str(tmp_path / "r.csv"),
    ])
    assert code == EXIT_INPUT_ERROR


def test_validate_involution_suite_passes(capsys) -> None:
    assert main(["validate", "--suite", "involution", "--seed", "0"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS involution")


def test_validate_uni_cross_suite_passes(capsys) -> None:
    assert main(["validate", "--suite", "uni-cross", "--seed", "0"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS uni-cross")
