"""CLI contract tests: output shapes, exit codes, determinism.

Everything goes through main(argv) directly; no subprocesses, so the
suite stays fast and failures carry tracebacks.
"""

import json

import pytest

from asymptode.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSeries:
    def test_beta_table_matches_known_values(self, capsys):
        code, out, _ = run(capsys, "series", "--family", "beta", "--order", "4")
        assert code == 0
        assert "beta[2] = -21/16" in out
        assert "beta[4] = -7245/256" in out

    def test_alpha_order_zero(self, capsys):
        code, out, _ = run(capsys, "series", "--family", "alpha", "--order", "0")
        assert code == 0
        assert out == "alpha[0] = 1\n"

    def test_q_json(self, capsys):
        code, out, _ = run(capsys, "series", "--family", "q", "--order", "1", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["family"] == "q"
        assert payload["entries"]["1"] == "3/16*z - 1/16*c"

    def test_lambert_family_csv(self, capsys):
        code, out, _ = run(capsys, "series", "--family", "lambert", "--order", "2", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "k,value"
        assert len(lines) == 4  # k = 0, 1, 2

    def test_q_order_zero_is_usage_error(self, capsys):
        code, _, err = run(capsys, "series", "--family", "q", "--order", "0")
        assert code == 2
        assert "error" in err


class TestIntegrate:
    def test_csv_shape(self, capsys):
        code, out, _ = run(capsys, "integrate", "--t-max", "100", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "t,h,hprime"
        assert len(lines) > 3
        for line in lines[1:]:
            t, h, hp = (float(part) for part in line.split(","))
            assert h > 0

    def test_json_has_stats_and_samples(self, capsys):
        code, out, _ = run(capsys, "integrate", "--t-max", "100", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["stats"]["steps"] > 0
        assert set(payload["samples"][0]) == {"t", "h", "hprime"}

    def test_bad_data_is_usage_error(self, capsys):
        code, _, err = run(capsys, "integrate", "--h0", "-1")
        assert code == 2
        assert "error" in err


class TestConstant:
    def test_known_constant(self, capsys):
        code, out, _ = run(capsys, "constant", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["c"].startswith("-18.644415060418059")

    def test_table_format(self, capsys):
        code, out, _ = run(capsys, "constant")
        assert code == 0
        assert out.startswith("c = -18.6444150604")


class TestVerify:
    def test_synthetic_self_test_passes(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--synthetic", "4", "--n-max", "2",
            "--t-grid", "1e2,1e3,1e4",
        )
        assert code == 0
        assert out.strip().endswith("PASS")

    def test_synthetic_json_payload(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--synthetic", "4", "--n-max", "2",
            "--t-grid", "1e2,1e3,1e4", "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["pass"] is True
        assert payload["shift"]["ok"] is True
        assert payload["report"]["growth"]["2"]

    def test_real_integration_small_grid(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--n-max", "1", "--t-grid", "1e2,1e3",
            "--rel-tol", "1e-14", "--abs-tol", "1e-16",
        )
        assert code == 0
        assert out.strip().endswith("PASS")

    def test_growth_failure_exits_1(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--synthetic", "4", "--n-max", "2",
            "--t-grid", "1e2,1e3", "--growth-factor", "1e-12",
        )
        assert code == 1
        assert out.strip().endswith("FAIL")

    def test_loose_tolerances_exit_3(self, capsys):
        code, _, err = run(
            capsys, "verify", "--n-max", "2", "--t-grid", "1e5,1e6",
            "--rel-tol", "1e-6", "--abs-tol", "1e-8",
        )
        assert code == 3
        assert "error" in err

    def test_synthetic_order_must_exceed_n_max(self, capsys):
        code, _, err = run(capsys, "verify", "--synthetic", "2", "--n-max", "2")
        assert code == 2
        assert "error" in err


class TestLambert:
    def test_default_run_passes(self, capsys):
        code, out, _ = run(capsys, "lambert", "--x-grid", "10,100,1e3")
        assert code == 0
        assert out.strip().endswith("PASS")

    def test_csv_rows(self, capsys):
        code, out, _ = run(capsys, "lambert", "--n-max", "1", "--x-grid", "10,100", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "n,x,y_num,Y_n,ratio"
        assert len(lines) == 1 + 2 * 2

    def test_impossible_residual_exits_1(self, capsys):
        code, out, _ = run(capsys, "lambert", "--x-grid", "10,100", "--residual-tol", "1e-60")
        assert code == 1
        assert out.strip().endswith("FAIL")


class TestContract:
    def test_help_exits_zero(self, capsys):
        assert run(capsys, "--help")[0] == 0

    def test_missing_subcommand_is_usage_error(self, capsys):
        assert run(capsys)[0] == 2

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run(capsys, "constant", "--frobnicate")[0] == 2

    def test_bad_grid_is_usage_error(self, capsys):
        assert run(capsys, "verify", "--t-grid", "1e2,banana")[0] == 2

    def test_byte_identical_reruns(self, capsys):
        _, first, _ = run(capsys, "verify", "--synthetic", "4", "--n-max", "2",
                          "--t-grid", "1e2,1e3", "--format", "json")
        _, second, _ = run(capsys, "verify", "--synthetic", "4", "--n-max", "2",
                           "--t-grid", "1e2,1e3", "--format", "json")
        assert first == second

    def test_out_writes_file(self, capsys, tmp_path):
        target = tmp_path / "series.csv"
        code, out, _ = run(capsys, "series", "--family", "beta", "--order", "2",
                           "--format", "csv", "--out", str(target))
        assert code == 0
        assert out == ""
        assert target.read_text().startswith("k,value")
