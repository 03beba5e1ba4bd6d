"""
Functional tests for the analysis commands.

Commands are run through the Flask CLI runner; reports are read back from
the --output file so stderr logging never mixes into the JSON.
"""

import json
import math

import pytest

from models import RunRecord


def run(runner, tmp_path, *args):
    out = tmp_path / "report.json"
    result = runner.invoke(args=[*args, "-o", str(out)])
    report = json.loads(out.read_text(encoding="utf-8")) if out.exists() else None
    return result, report


class TestExitCodes:
    """0 on success, 2 on configuration errors, 3 on computational failure"""

    def test_missing_system_file(self, runner, tmp_path):
        result, report = run(runner, tmp_path, "rest-points", str(tmp_path / "nowhere.sys"))
        assert result.exit_code == 2
        assert report is None

    def test_out_of_range_parameter(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "lyapunov", gradient_system_file, "--grid", "4")
        assert result.exit_code == 2
        assert report is None
        assert "grid" in result.output
        assert RunRecord.query.count() == 0

    def test_malformed_system(self, runner, tmp_path, write_system):
        path = write_system("dim = 2\nfield.1 = sinp(x1\nfield.2 = 0\nomega.harmonic = -1, 0\n")
        result, report = run(runner, tmp_path, "rest-points", path)
        assert result.exit_code == 2
        assert report is None
        assert "line 2" in result.output

    def test_computational_failure_keeps_partial_report(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "rinv", gradient_system_file, "--n-quad", "16")
        assert result.exit_code == 3
        assert report["status"] == "failed"
        assert report["error"].startswith("RestPointPresentError")
        record = RunRecord.query.one()
        assert record.exit_code == 3
        assert not record.succeeded


class TestFlowCommands:
    def test_rest_points(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "rest-points", gradient_system_file)
        assert result.exit_code == 0
        assert report["status"] == "ok"
        assert report["results"]["counts"] == [1, 2, 1]
        assert report["results"]["poincare_hopf"] == 0
        assert report["results"]["properties"]["H"] is True
        assert report["warnings"] == []
        assert "timing" not in report

    def test_timing_flag(self, runner, tmp_path, circle_orbits_file):
        result, report = run(runner, tmp_path, "rest-points", circle_orbits_file, "--timing")
        assert result.exit_code == 0
        assert report["results"]["counts"] == [0, 0, 0]
        assert report["timing"]["elapsed_seconds"] >= 0

    def test_lyapunov(self, runner, tmp_path, circle_orbits_file):
        result, report = run(runner, tmp_path, "lyapunov", circle_orbits_file, "--grid", "16")
        assert result.exit_code == 0
        assert report["results"]["lyapunov"]["is_lyapunov"] is True

    def test_growth_unknown_label(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "growth", gradient_system_file, "--rest-point", "9")
        assert result.exit_code == 2
        assert report is None

    def test_growth_of_saddles(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "growth", gradient_system_file, "--rest-point", "1", "--r-max", "2")
        assert result.exit_code == 0
        assert report["results"]["eg_pass"] is True
        assert len(report["results"]["growth"]) == 1


class TestInstantonCommand:
    def test_from_without_to(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "instantons", gradient_system_file, "--from", "1")
        assert result.exit_code == 2
        assert report is None

    def test_single_pair(self, runner, tmp_path, gradient_system_file):
        result, report = run(
            runner, tmp_path, "instantons", gradient_system_file, "--from", "1", "--to", "0", "--shots", "180"
        )
        assert result.exit_code == 0
        (search,) = report["results"]["searches"]
        assert search["count"] == 2
        assert sorted(i["sign"] for i in search["instantons"]) == [-1, 1]
        assert report["results"]["max_reintegration_error"] < 1e-6
        assert [c["count"] for c in search["count_below"]] == [2, 2, 2]


class TestOrbitAndSeriesCommands:
    def test_orbits(self, runner, tmp_path, circle_orbits_file):
        result, report = run(runner, tmp_path, "orbits", circle_orbits_file, "--cutoff", "2", "--fd-check")
        assert result.exit_code == 0
        assert report["results"]["orbits"]["primitive_count"] == 2
        assert len(report["results"]["orbits"]["orbits"]) == 4
        assert all(e["value"] == "0" for e in report["results"]["counting"]["entries"])
        for error in report["results"]["monodromy_fd_error"]:
            assert error < 1.0

    def test_zeta_vanishes_for_circle_orbits(self, runner, tmp_path, circle_orbits_file):
        result, report = run(runner, tmp_path, "series", circle_orbits_file, "--cutoff", "3", "--eval", "2.0")
        assert result.exit_code == 0
        (value,) = report["results"]["values"]
        assert value["value"] == {"re": 0.0, "im": 0.0}
        assert "abscissa_note" in report["results"]

    def test_bad_complex_argument(self, runner, tmp_path, circle_orbits_file):
        result, report = run(runner, tmp_path, "series", circle_orbits_file, "--eval", "two")
        assert result.exit_code == 2

    def test_instanton_series_needs_pair(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "series", gradient_system_file, "--kind", "instanton")
        assert result.exit_code == 2


class TestNovikovCommands:
    def test_betti_from_covector(self, runner, tmp_path):
        result, report = run(runner, tmp_path, "betti", "--xi", "1,0", "--t", "5")
        assert result.exit_code == 0
        assert report["results"]["betti"] == [0, 0, 0]
        assert report["results"]["spectral"] == [0, 0, 0]
        assert report["config"]["system"] is None

    def test_betti_from_system(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "betti", gradient_system_file, "--grid", "8")
        assert result.exit_code == 0
        assert report["results"]["betti"] == [1, 2, 1]

    def test_betti_needs_input(self, runner, tmp_path):
        result, report = run(runner, tmp_path, "betti")
        assert result.exit_code == 2

    def test_inequalities(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "inequalities", gradient_system_file, "--grid", "8")
        assert result.exit_code == 0
        assert report["results"]["counts"] == [1, 2, 1]
        assert report["results"]["novikov"]["inequalities"]["ok"] is True

    def test_complex_check(self, runner, tmp_path, gradient_system_file):
        result, report = run(
            runner, tmp_path, "complex", gradient_system_file, "--check-d2", "--shots", "180", "--t", "1.0"
        )
        assert result.exit_code == 0
        assert report["results"]["delta_squared"]["ok"] is True
        assert report["results"]["euler_characteristic"] == 0
        (entry,) = report["results"]["differentials"]
        assert len(entry["matrices"]) == 2


class TestWittenCommands:
    def test_r_invariant(self, runner, tmp_path, rotating_frame_file):
        result, report = run(runner, tmp_path, "rinv", rotating_frame_file, "--n-quad", "128")
        assert result.exit_code == 0
        assert abs(report["results"]["r_invariant"] - 0.7) < 1e-6
        assert report["results"]["omega_class"] == [0.7, 0.2]

    def test_spectrum(self, runner, tmp_path, gradient_system_file):
        result, report = run(
            runner, tmp_path, "witten-spectrum", gradient_system_file, "--grid", "16", "--t", "2"
        )
        assert result.exit_code == 0
        assert report["results"]["targets"] == [1, 2, 1]
        assert report["results"]["split"]["small_counts"] == [1, 2, 1]
        assert report["results"]["torsion"]["splitting_residual"] < 1e-8

    def test_polynomial_model(self, runner, tmp_path, gradient_system_file):
        result, report = run(
            runner, tmp_path, "witten-spectrum", gradient_system_file, "-N", "16", "--t", "2", "--model", "polynomial"
        )
        assert result.exit_code in (0, 3)
        assert report["config"]["params"]["model"] == "polynomial"

    def test_grid_out_of_range(self, runner, tmp_path, gradient_system_file):
        result, report = run(runner, tmp_path, "witten-spectrum", gradient_system_file, "--grid", "1000")
        assert result.exit_code == 2
        assert report is None


class TestArchive:
    def test_every_run_is_recorded(self, runner, tmp_path, gradient_system_file, rotating_frame_file):
        run(runner, tmp_path, "rest-points", gradient_system_file)
        run(runner, tmp_path, "rinv", rotating_frame_file, "--n-quad", "32")
        records = RunRecord.query.order_by(RunRecord.id).all()
        assert [r.command for r in records] == ["rest-points", "rinv"]
        assert all(r.succeeded for r in records)
        assert records[0].system_name == gradient_system_file
        payload = json.loads(records[1].payload_json)
        assert math.isfinite(payload["results"]["r_invariant"])

    def test_runs_listing(self, runner, tmp_path, gradient_system_file):
        run(runner, tmp_path, "rest-points", gradient_system_file)
        result = runner.invoke(args=["runs", "--command", "rest-points"])
        assert result.exit_code == 0
        assert "rest-points" in result.output
        assert "exit=0" in result.output

    def test_archive_can_be_disabled(self, app, runner, tmp_path, gradient_system_file):
        app.config["NOVIKOV_STORE_RUNS"] = False
        try:
            result, _ = run(runner, tmp_path, "rest-points", gradient_system_file)
        finally:
            app.config["NOVIKOV_STORE_RUNS"] = True
        assert result.exit_code == 0
        assert RunRecord.query.count() == 0


@pytest.mark.slow
class TestReportAll:
    ARGS = ["--grid", "16", "--t-values", "2,4", "--shots", "180", "--cutoff", "5"]

    def test_report_all_is_deterministic(self, runner, tmp_path, gradient_system_file):
        first, report = run(runner, tmp_path, "report-all", gradient_system_file, *self.ARGS)
        text = (tmp_path / "report.json").read_text(encoding="utf-8")
        second, _ = run(runner, tmp_path, "report-all", gradient_system_file, *self.ARGS)
        assert first.exit_code == 0
        assert second.exit_code == 0
        assert (tmp_path / "report.json").read_text(encoding="utf-8") == text

        summary = report["results"]["summary"]
        assert summary["counts"] == [1, 2, 1]
        assert summary["delta_squared_ok"] is True
        assert summary["spectral_counts"] == {"2.0": [1, 2, 1], "4.0": [1, 2, 1]}
        assert summary["max_splitting_residual"] < 1e-8
        assert summary["inequalities_ok"] is True
        assert [e["t"] for e in report["results"]["sweep"]] == [2.0, 4.0]

    def test_rest_point_free_report(self, runner, tmp_path, rotating_frame_file):
        result, report = run(
            runner, tmp_path, "report-all", rotating_frame_file, "--grid", "8", "--t-values", "1,2", "--cutoff", "3"
        )
        assert result.exit_code in (0, 3)
        assert abs(report["results"]["r_invariant"] - 0.7) < 1e-4
        assert report["results"]["complex"]["counts"] == [0, 0, 0]
