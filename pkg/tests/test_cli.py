"""Command-line interface: schemas, determinism, exit codes."""

import json
import math

import numpy as np
import pytest

from critpoints.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestFractionsCommand:
    def test_three_dim_values(self, capsys):
        code, out = run_cli(capsys, "fractions", "--N", "3")
        assert code == 0
        doc = json.loads(out)
        assert doc["schema"] == 1
        np.testing.assert_allclose(
            doc["outputs"]["fractions"], [0.1233, 0.3767, 0.3767, 0.1233], atol=5e-4
        )

    def test_cross_check(self, capsys):
        code, out = run_cli(capsys, "fractions", "--N", "2", "--cross-check")
        doc = json.loads(out)
        assert doc["outputs"]["cross_check"]["max_gap"] < 1e-9


class TestGoeDensityCommand:
    def test_csv_row_at_zero(self, capsys):
        code, out = run_cli(
            capsys, "goe-density", "--N", "3", "--k", "2",
            "--grid", "-4:4:0.1", "--format", "csv",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "ell,density"
        center = [l for l in lines[1:] if l.startswith("0,")][0]
        assert float(center.split(",")[1]) == pytest.approx(
            1.0 / math.sqrt(math.pi), abs=1e-6
        )

    def test_json_methods_agree(self, capsys):
        code, out = run_cli(
            capsys, "goe-density", "--N", "2", "--k", "2",
            "--grid", "-1:1:0.5", "--cross-check",
        )
        doc = json.loads(out)
        assert doc["outputs"]["cross_check"]["sup_gap"] < 1e-9
        assert doc["outputs"]["method"] in ("closed-form", "pfaffian")

    def test_float_fidelity(self, capsys):
        # 17 significant digits must round-trip exactly
        _, out = run_cli(capsys, "goe-density", "--N", "3", "--k", "2",
                         "--grid", "0:0:1")
        doc = json.loads(out)
        assert doc["outputs"]["density"][0] == 1.0 / math.sqrt(math.pi)


class TestDeterminism:
    def test_byte_identical_json(self, capsys):
        args = ("corr-mc", "--model", "gaussian:a=1", "--N", "1",
                "--rho-grid", "0.05:0.2:3:log", "--samples", "20000",
                "--seed", "11")
        _, first = run_cli(capsys, *args)
        _, second = run_cli(capsys, *args)
        assert first == second

    def test_sample_seeded(self, capsys):
        args = ("goe-sample", "--N", "3", "--samples", "5", "--seed", "9")
        _, a = run_cli(capsys, *args)
        _, b = run_cli(capsys, *args)
        assert a == b


class TestExitCodes:
    def test_unknown_flag(self, capsys):
        assert main(["fractions", "--N", "3", "--bogus"]) == 1

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_precondition_violation(self, capsys):
        assert main(["fractions", "--N", "99"]) == 2

    def test_bad_model_spec(self, capsys):
        assert main(["counts", "--model", "nosuch:a=1", "--N", "2"]) == 2

    def test_singular_separation(self, capsys):
        # rho = 0 in the grid: precondition violation, not a crash
        code = main(["corr-mc", "--model", "gaussian:a=1", "--N", "1",
                     "--rho-grid", "0:0.1:2:lin", "--samples", "10000"])
        assert code == 2


class TestCountsCommand:
    def test_total_with_cross_check(self, capsys):
        code, out = run_cli(
            capsys, "counts", "--model", "gaussian:a=1", "--N", "2",
            "--cross-check",
        )
        doc = json.loads(out)
        values = {v["method"]: v["value"] for v in doc["outputs"]["values"]
                  if v["name"] == "mean_count_total"}
        assert values["closed-form"] == pytest.approx(
            4.0 / (math.sqrt(3.0) * math.pi), rel=1e-12
        )
        assert values["pfaffian+quadrature"] == pytest.approx(
            values["closed-form"], rel=1e-8
        )

    def test_level_count(self, capsys):
        code, out = run_cli(
            capsys, "counts", "--model", "moments:l2=2,l4=13", "--N", "2",
            "--k", "0", "--u", "1.0",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["outputs"]["values"][0]["value"] > 0


class TestSimulateCommand:
    def test_small_run_with_snapshot(self, capsys, tmp_path):
        snap = tmp_path / "grid.cplb"
        code, out = run_cli(
            capsys, "simulate", "--model", "gaussian:a=1", "--N", "2",
            "--side", "64", "--spacing", "0.2", "--realizations", "2",
            "--seed", "3", "--save-grid", str(snap), "--threads", "1",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["outputs"]["points"] > 0
        assert snap.exists()
        from critpoints.fields import load_grid

        assert load_grid(snap).side == 64

    def test_pair_binning(self, capsys):
        code, out = run_cli(
            capsys, "simulate", "--model", "gaussian:a=1", "--N", "2",
            "--side", "64", "--spacing", "0.2", "--realizations", "3",
            "--seed", "4", "--pair-bins", "0:3:7:lin",
        )
        doc = json.loads(out)
        prof = doc["outputs"]["pair_correlation"]
        assert len(prof["g_value"]) == 6


class TestValidateCommand:
    def test_tiny_suite_runs(self, capsys, monkeypatch):
        import critpoints.validation as validation

        monkeypatch.setitem(
            validation.SUITES, "quick", ["q32-gaussian", "goe-closed-forms"]
        )
        code, out = run_cli(capsys, "validate", "--suite", "quick")
        assert code == 0
