"""End-to-end command-line runs, in process via main(argv)."""

import csv
import json

import pytest

from relayage.cli import build_parser, main


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestEvalDtr:
    def test_perfect_links_sweep(self, tmp_path):
        out = tmp_path / "rows.csv"
        rc = main(
            [
                "eval-dtr",
                "--p", "1.0", "--q", "1.0",
                "--delta1", "1,2,3,4,5,6,7,8", "--delta2", "2",
                "--out", str(out),
            ]
        )
        assert rc == 0
        rows = _read_csv(out)
        assert len(rows) == 8
        for row in rows:
            assert float(row["avg_aoi"]) == 2.5
            assert float(row["forwarding_rate"]) == 0.5
            # only the boundary delta1 == delta2 - 1 cell is exact
            assert row["exact"] == ("true" if row["delta1"] == "1" else "false")
            assert float(row["avg_aoi_exact"]) == 2.5

    def test_exact_flag_tracks_regime(self, tmp_path):
        out = tmp_path / "rows.csv"
        assert main(
            ["eval-dtr", "--p", "0.5", "--q", "0.5", "--delta1", "1",
             "--delta2", "4", "--out", str(out)]
        ) == 0
        (row,) = _read_csv(out)
        assert row["exact"] == "true"
        assert row["status"] == "ok"

    def test_json_format(self, tmp_path):
        out = tmp_path / "rows.json"
        assert main(
            ["eval-dtr", "--p", "0.5", "--q", "0.5", "--delta1", "1,2",
             "--delta2", "3", "--format", "json", "--out", str(out)]
        ) == 0
        rows = json.loads(out.read_text())
        assert [r["delta1"] for r in rows] == [1, 2]

    def test_stdout_when_no_out(self, capsys):
        assert main(["eval-dtr", "--p", "1.0", "--q", "1.0"]) == 0
        captured = capsys.readouterr().out
        rows = list(csv.DictReader(captured.splitlines()))
        assert float(rows[0]["avg_aoi"]) == 2.5

    def test_workers_do_not_change_output(self, tmp_path):
        args = ["eval-dtr", "--p", "0.3,0.6", "--q", "0.5,0.8",
                "--delta1", "1,2,3", "--delta2", "2,4"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a), "--workers", "1"]) == 0
        assert main(args + ["--out", str(b), "--workers", "2"]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestSolveCmdp:
    def test_summary_row(self, tmp_path):
        out = tmp_path / "cmdp.csv"
        rc = main(
            ["solve-cmdp", "--p", "0.6", "--q", "0.7", "--eta-c", "0.45",
             "--kmax", "80", "--dmax", "80", "--out", str(out)]
        )
        assert rc == 0
        (row,) = _read_csv(out)
        assert row["status"] == "ok"
        assert abs(float(row["forwarding_rate"]) - 0.45) < 1e-6
        assert 0.0 <= float(row["alpha"]) <= 1.0
        assert int(row["switching_violations"]) == 0
        assert float(row["lambda1"]) <= float(row["lambda2"])

    def test_policy_grid_rows(self, tmp_path):
        out = tmp_path / "grid.csv"
        rc = main(
            ["solve-cmdp", "--p", "0.6", "--q", "0.7", "--eta-c", "0.45",
             "--kmax", "60", "--dmax", "60", "--policy-grid", "--out", str(out)]
        )
        assert rc == 0
        rows = _read_csv(out)
        # one row per truncated state: (kmax-1) + (dmax-1)*kmax
        assert len(rows) == 59 + 59 * 60
        kinds = {row["action"] for row in rows}
        assert kinds == {"receive", "forward", "mix"}
        mixed = [row for row in rows if row["action"] == "mix"]
        assert len(mixed) == 1
        assert 0.0 < float(mixed[0]["alpha"]) < 1.0


class TestOptimizeDtr:
    def test_feasible_cell(self, tmp_path):
        out = tmp_path / "opt.csv"
        assert main(
            ["optimize-dtr", "--p", "0.6", "--q", "0.7", "--eta-c", "0.45",
             "--out", str(out)]
        ) == 0
        (row,) = _read_csv(out)
        assert (int(row["delta1"]), int(row["delta2"])) == (2, 2)
        assert float(row["forwarding_rate"]) <= 0.45 + 1e-12

    def test_infeasible_cell_exits_nonzero(self, tmp_path):
        out = tmp_path / "opt.csv"
        rc = main(
            ["optimize-dtr", "--p", "0.6", "--q", "0.7", "--eta-c", "0.05",
             "--delta1-max", "4", "--delta2-max", "4", "--out", str(out)]
        )
        assert rc == 1
        (row,) = _read_csv(out)
        assert row["status"] == "error"
        assert float(row["min_rate"]) > 0.05


class TestOracle:
    def test_summary(self, tmp_path):
        out = tmp_path / "oracle.csv"
        assert main(
            ["oracle", "--p", "1.0", "--q", "1.0", "--delta1", "1", "--delta2", "2",
             "--kmax", "40", "--dmax", "40", "--out", str(out)]
        ) == 0
        (row,) = _read_csv(out)
        assert float(row["avg_aoi"]) == pytest.approx(2.5, abs=1e-12)
        assert float(row["forwarding_rate"]) == pytest.approx(0.5, abs=1e-12)
        assert float(row["residual"]) <= 1e-10

    def test_full_distribution_rows(self, tmp_path):
        out = tmp_path / "dist.json"
        assert main(
            ["oracle", "--p", "0.5", "--q", "0.5", "--delta1", "1", "--delta2", "4",
             "--kmax", "30", "--dmax", "30", "--full-distribution",
             "--format", "json", "--out", str(out)]
        ) == 0
        (row,) = json.loads(out.read_text())
        triples = row["distribution"]
        assert len(triples) == 29 + 29 * 30
        mass = sum(prob for _, _, prob in triples)
        assert mass == pytest.approx(1.0, abs=1e-9)


class TestSimulate:
    def test_dtr_cell(self, tmp_path):
        out = tmp_path / "sim.csv"
        assert main(
            ["simulate", "--p", "1.0", "--q", "1.0", "--delta1", "1", "--delta2", "2",
             "--horizon", "4000", "--runs", "2", "--out", str(out)]
        ) == 0
        (row,) = _read_csv(out)
        assert float(row["mean_aoi"]) == 2.5
        assert float(row["mean_forwarding_rate"]) == 0.5

    def test_mixture_cell(self, tmp_path):
        out = tmp_path / "mix.csv"
        assert main(
            ["simulate", "--p", "0.6", "--q", "0.7", "--eta-c", "0.45",
             "--kmax", "60", "--dmax", "60",
             "--horizon", "50000", "--runs", "4", "--seed", "5", "--out", str(out)]
        ) == 0
        (row,) = _read_csv(out)
        assert abs(float(row["mean_forwarding_rate"]) - 0.45) <= 3 * float(row["se_rate"])


class TestVerify:
    def test_clean_cell_exits_zero(self, tmp_path):
        out = tmp_path / "verify.csv"
        rc = main(
            ["verify", "--p", "0.5", "--q", "0.5", "--delta1", "1", "--delta2", "4",
             "--kmax", "200", "--dmax", "200", "--out", str(out)]
        )
        assert rc == 0
        (row,) = _read_csv(out)
        assert row["status"] == "ok"
        assert int(row["recurrences"]) == 0
        assert int(row["structure_violations"]) == 0
        assert float(row["rate_gap"]) <= 1e-8
        assert float(row["exact_aoi_gap"]) <= 1e-8


class TestCompare:
    def test_ratio_fields(self, tmp_path):
        out = tmp_path / "cmp.csv"
        assert main(
            ["compare", "--p", "0.6", "--q", "0.7", "--eta-c", "0.45",
             "--kmax", "80", "--dmax", "80", "--out", str(out)]
        ) == 0
        (row,) = _read_csv(out)
        assert float(row["ratio"]) >= 1.0 - 1e-9
        assert float(row["ratio"]) <= 1.05
        assert float(row["dtr_rate"]) <= 0.45 + 1e-12


class TestSweep:
    def test_threshold_preset(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(
            ["sweep", "--preset", "aoi-vs-thresholds", "--p", "0.6", "--q", "0.7",
             "--out", str(out)]
        ) == 0
        rows = _read_csv(out)
        assert len(rows) == 8 * 7
        assert all(row["status"] == "ok" for row in rows)

    def test_q_preset_rates_monotone(self, tmp_path):
        out = tmp_path / "sweepq.csv"
        assert main(
            ["sweep", "--preset", "aoi-vs-q", "--p", "0.6", "--out", str(out)]
        ) == 0
        rows = [r for r in _read_csv(out) if r["delta1"] == "1" and r["delta2"] == "2"]
        qs = [float(r["q"]) for r in rows]
        assert qs == sorted(qs)
        assert len(rows) == 15


class TestArgumentValidation:
    @pytest.mark.parametrize(
        "argv",
        [
            ["eval-dtr", "--delta1", "0"],
            ["eval-dtr", "--delta2", "1"],
            ["eval-dtr", "--p", "1.2"],
            ["eval-dtr", "--q", "0"],
            ["solve-cmdp", "--eta-c", "0"],
            ["solve-cmdp", "--eta-c", "1.5"],
            ["simulate", "--horizon", "0"],
            ["simulate", "--runs", "-1"],
            ["eval-dtr", "--workers", "0"],
            ["oracle", "--kmax", "1"],
        ],
    )
    def test_domain_errors_exit_two(self, argv, capsys):
        with pytest.raises(SystemExit) as ei:
            main(argv)
        assert ei.value.code == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_missing_subcommand_exits_two(self, capsys):
        with pytest.raises(SystemExit) as ei:
            main([])
        assert ei.value.code == 2

    def test_parser_builds(self):
        assert build_parser().prog == "relayage"
