import json
import subprocess
import sys
from pathlib import Path

import pytest

SPECS = Path(__file__).parent.parent / "specs"


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "hyperddc.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


class TestSolve:
    def test_finite_writes_tables(self, tmp_path):
        out = run_cli("solve", "--spec", SPECS / "sixstate.json", "--out", tmp_path)
        assert out.returncode == 0
        lines = (tmp_path / "ccp.csv").read_text().strip().splitlines()
        assert lines[0] == "period,state,choice,probability"
        assert len(lines) == 1 + 2 * 3 * 6  # choices x periods x states
        assert (tmp_path / "values.csv").exists()

    def test_stationary_reports_residual(self, tmp_path):
        out = run_cli("solve", "--spec", SPECS / "stationary3.json", "--out", tmp_path)
        assert out.returncode == 0
        assert "residual" in out.stdout
        assert (tmp_path / "ccp.csv").exists()

    def test_malformed_spec_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        out = run_cli("solve", "--spec", bad, "--out", tmp_path)
        assert out.returncode == 2
        assert "error:" in out.stderr

    def test_invariant_violation_exits_2(self, tmp_path):
        doc = json.loads((SPECS / "sixstate.json").read_text())
        doc["transitions"]["act"][0][0] += 0.2
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        out = run_cli("solve", "--spec", bad, "--out", tmp_path)
        assert out.returncode == 2
        assert "sums to" in out.stderr

    def test_byte_identical_outputs(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out_dir in (a, b):
            assert run_cli(
                "solve", "--spec", SPECS / "sixstate.json", "--out", out_dir
            ).returncode == 0
        assert (a / "ccp.csv").read_bytes() == (b / "ccp.csv").read_bytes()
        assert (a / "values.csv").read_bytes() == (b / "values.csv").read_bytes()


class TestIdentify:
    def test_point_identified_report(self, tmp_path):
        out = run_cli(
            "identify",
            "--spec", SPECS / "sixstate.json",
            "--restrictions", SPECS / "sixstate_restrictions.json",
            "--out", tmp_path,
        )
        assert out.returncode == 0
        report = json.loads((tmp_path / "identified_set.json").read_text())
        assert len(report["candidates"]) == 1
        assert abs(report["candidates"][0]["beta"] - 0.80) <= 1e-6
        assert abs(report["candidates"][0]["delta"] - 0.50) <= 1e-6
        assert report["resultant_coefficients"]
        assert not report["common_factor_detected"]

    def test_common_factor_report(self, tmp_path):
        out = run_cli(
            "identify",
            "--spec", SPECS / "sixstate.json",
            "--restrictions", SPECS / "sixstate_restrictions_t2.json",
            "--out", tmp_path,
        )
        assert out.returncode == 0  # a finding, not an error
        report = json.loads((tmp_path / "identified_set.json").read_text())
        assert report["common_factor_detected"]
        assert abs(report["identified_product"] - 0.40) <= 1e-8
        assert "common factor" in out.stdout

    def test_rejection_report(self, tmp_path):
        doc = json.loads((SPECS / "sixstate.json").read_text())
        doc["utilities"]["act"][0][0] = 9.0  # break the period-1 exclusion
        spec = tmp_path / "m.json"
        spec.write_text(json.dumps(doc))
        out = run_cli(
            "identify",
            "--spec", spec,
            "--restrictions", SPECS / "sixstate_restrictions.json",
            "--out", tmp_path,
        )
        assert out.returncode == 0
        report = json.loads((tmp_path / "identified_set.json").read_text())
        assert report["model_rejected"]
        assert "rejected" in out.stdout


class TestEstimate:
    def test_exact_estimate(self, tmp_path):
        out = run_cli(
            "estimate",
            "--spec", SPECS / "sixstate.json",
            "--restrictions", SPECS / "sixstate_restrictions.json",
            "--exact",
            "--out", tmp_path,
        )
        assert out.returncode == 0
        report = json.loads((tmp_path / "estimate.json").read_text())
        assert abs(report["beta_hat"] - 0.8) <= 1e-3
        assert abs(report["delta_hat"] - 0.5) <= 1e-3
        assert report["criterion"] <= 1e-12

    def test_geometric_estimate(self, tmp_path):
        out = run_cli(
            "estimate",
            "--spec", SPECS / "sixstate.json",
            "--restrictions", SPECS / "sixstate_restrictions.json",
            "--exact", "--geometric",
            "--out", tmp_path,
        )
        assert out.returncode == 0
        report = json.loads((tmp_path / "estimate.json").read_text())
        assert abs(report["delta_hat"] - 0.40) <= 0.005
        assert "geometric" in out.stdout


class TestReplicateAndSurface:
    def test_small_replication_table(self, tmp_path):
        out = run_cli(
            "replicate",
            "--spec", SPECS / "sixstate.json",
            "--restrictions", SPECS / "sixstate_restrictions.json",
            "--replications", 3,
            "--n-agents", 5000,
            "--seed", 9,
            "--out", tmp_path,
        )
        assert out.returncode == 0
        lines = (tmp_path / "replications.csv").read_text().strip().splitlines()
        assert lines[0] == "rep,beta_hat,delta_hat,gamma_hat,criterion,converged"
        assert len(lines) == 4
        summary = json.loads((tmp_path / "replication_summary.json").read_text())
        assert summary["n_reps"] == 3

    def test_surface_grid(self, tmp_path):
        out = run_cli(
            "surface",
            "--spec", SPECS / "sixstate.json",
            "--restrictions", SPECS / "sixstate_restrictions.json",
            "--grid", "21x11",
            "--out", tmp_path,
        )
        assert out.returncode == 0
        lines = (tmp_path / "surface.csv").read_text().strip().splitlines()
        assert lines[0] == "beta,delta,criterion"
        assert len(lines) == 1 + 21 * 11
