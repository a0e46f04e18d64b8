import json
import math

import numpy as np
import pytest

from capssc.checkpoint import checkpoint_read
from capssc.cli import EXIT_CONSTRAINT, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from capssc.fields import EVEN, ODD


def run_cli(tmp_path, *args, run_id="t"):
    return main([*args, "--output_dir", str(tmp_path), "--run_id", run_id])


def read_json(path):
    return json.loads(path.read_text())


def test_build_data_writes_checkpoints_and_manifest(tmp_path, capsys):
    assert run_cli(tmp_path, "build-data", "--n", "64") == EXIT_OK
    for key in ("f", "psi", "u0_1", "u0_2"):
        assert (tmp_path / f"t_{key}.ckpt").exists()
    man = read_json(tmp_path / "t_manifest.json")
    assert man["config"]["n"] == 64 and man["version"]
    info = read_json(tmp_path / "t_initial.json")
    assert info["K0"] > 0 and info["non_plateau_measure"] <= 1e-2
    f = checkpoint_read(tmp_path / "t_f.ckpt")
    assert f.values.max() == pytest.approx(0.1)
    assert "K(0)" in capsys.readouterr().out


def test_zero_epsilon_gives_zero_velocity(tmp_path):
    assert run_cli(tmp_path, "build-data", "--n", "64", "--epsilon", "0") == EXIT_OK
    assert read_json(tmp_path / "t_initial.json")["K0"] == 0.0
    u1 = checkpoint_read(tmp_path / "t_u0_1.ckpt", parity=(EVEN, ODD))
    assert not u1.values.any()


def test_blend_too_wide_is_a_constraint_error(tmp_path, capsys):
    assert run_cli(tmp_path, "build-data", "--n", "64", "--blend_width", "0.3") == EXIT_CONSTRAINT
    assert "measure" in capsys.readouterr().err


def test_zero_horizon_writes_an_immediate_manifest(tmp_path):
    assert run_cli(tmp_path, "simulate", "--n", "64", "--T_horizon", "0") == EXIT_OK
    man = read_json(tmp_path / "t_manifest.json")
    assert man["extra"]["steps"] == 0 and man["acceptance"] == []


def test_coarse_grid_is_a_resolution_error(tmp_path, capsys):
    assert run_cli(tmp_path, "simulate", "--n", "32", "--T_horizon", "10") == EXIT_CONSTRAINT
    assert "cells per quadrant side" in capsys.readouterr().err


def test_short_simulation_outputs(tmp_path):
    code = run_cli(tmp_path, "simulate", "--n", "64", "--t_end", "1.0", "--sample_interval", "3",
                   "--snapshot_interval", "5")
    assert code == EXIT_OK
    summary = read_json(tmp_path / "t_summary.json")
    steps = summary["steps"]
    rows = (tmp_path / "t_series.csv").read_text().splitlines()
    # header, the t = 0 row, one row per sample_interval steps, and the final state
    assert len(rows) - 1 == math.ceil(steps / 3) + 1
    for name in ("growth.svg", "trajectory.svg", "sign_margins.svg", "trajectory.csv"):
        assert (tmp_path / f"t_{name}").exists()
    man = read_json(tmp_path / "t_manifest.json")
    assert {r["name"] for r in man["acceptance"]} >= {"conservation K drift", "trajectory exit edge"}
    assert list((tmp_path / "checkpoints").glob("t_snapshot_*.ckpt"))


def test_unknown_suite_and_bad_values_are_usage_errors(tmp_path):
    assert run_cli(tmp_path, "verify", "--suite", "nonsense") == EXIT_USAGE
    assert run_cli(tmp_path, "build-data", "--eta", "2") == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_config_from_environment(tmp_path, monkeypatch):
    ini = tmp_path / "c.ini"
    ini.write_text("[grid]\nn = 48\n")
    monkeypatch.setenv("CAPSSC_CONFIG", str(ini))
    assert run_cli(tmp_path, "build-data") == EXIT_OK
    assert read_json(tmp_path / "t_manifest.json")["config"]["n"] == 48


def test_verify_harmonic_small_family(tmp_path):
    assert run_cli(tmp_path, "verify", "--suite", "harmonic", "--harmonic_fields", "4") == EXIT_OK
    rep = read_json(tmp_path / "t_harmonic.json")
    assert rep["passed"] and rep["summary"]["fields"] == 5
    assert (tmp_path / "t_harmonic.csv").exists() and (tmp_path / "t_harmonic_margins.svg").exists()


def test_verify_geometry_reports_failing_invariants(tmp_path, capsys):
    code = run_cli(tmp_path, "verify", "--suite", "geometry", "--geometry_polygons", "30",
                   "--geometry_curves", "4", "--seed", "1")
    rep = read_json(tmp_path / "t_geometry.json")
    assert code == (EXIT_OK if rep["passed"] else EXIT_FAIL)
    if code == EXIT_FAIL:
        assert "failing invariants" in capsys.readouterr().err


def test_verify_bs_law_on_initial_data(tmp_path):
    code = run_cli(tmp_path, "verify", "--suite", "bs-law", "--n", "128", "--bs_samples", "20")
    rep = read_json(tmp_path / "t_bs_law.json")
    assert rep["summary"]["c0"] > 0 and np.isfinite(rep["summary"]["c0"])
    assert code == (EXIT_OK if rep["passed"] else EXIT_FAIL)
