import json

import numpy as np
import pytest

from ltsenet.cli import main

FOUR_POINT_CSV = "x,y\n0,0\n1,1\n2,2\n10,0\n"


@pytest.fixture
def four_point_csv(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(FOUR_POINT_CSV)
    return str(path)


def run(argv):
    return main(argv)


class TestFit:
    def test_exact_collinear(self, four_point_csv, tmp_path):
        out = tmp_path / "fit.json"
        code = run([
            "fit", "--input", four_point_csv, "--output", str(out),
            "--h", "3", "--lambda1", "0", "--lambda2", "0", "--exact",
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["schema_version"] == 1
        assert doc["intercept"] == pytest.approx(0.0, abs=1e-9)
        assert doc["coefficients"]["x"] == pytest.approx(1.0, abs=1e-9)
        assert doc["objective"] == pytest.approx(0.0, abs=1e-12)
        assert doc["trim_indices"] == [1, 2, 3]  # 1-based
        assert doc["method"] == "exact"
        assert doc["diagnostics"]["unique_flag"] is True

    def test_h_equals_n_matches_least_squares(self, four_point_csv, tmp_path, capsys):
        code = run([
            "fit", "--input", four_point_csv,
            "--h", "4", "--lambda1", "0", "--lambda2", "0", "--n-starts", "5",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        x = np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 10.0]])
        y = np.array([0.0, 1.0, 2.0, 0.0])
        expected = np.linalg.lstsq(x, y, rcond=None)[0]
        assert np.allclose(doc["beta"], expected, atol=1e-8)

    def test_deterministic_output(self, four_point_csv, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        argv = [
            "fit", "--input", four_point_csv, "--h", "3",
            "--lambda1", "0.01", "--lambda2", "0.01", "--seed", "5", "--n-starts", "20",
        ]
        assert run(argv + ["--output", str(out1)]) == 0
        assert run(argv + ["--output", str(out2)]) == 0
        a, b = json.loads(out1.read_text()), json.loads(out2.read_text())
        a.pop("timestamp"), b.pop("timestamp")
        assert a == b

    def test_warm_start_round_trip(self, four_point_csv, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        argv = [
            "fit", "--input", four_point_csv, "--h", "3",
            "--lambda1", "0.01", "--lambda2", "0.01", "--seed", "5", "--n-starts", "20",
        ]
        assert run(argv + ["--output", str(out1)]) == 0
        assert run(argv + ["--output", str(out2), "--warm-start", str(out1)]) == 0
        a, b = json.loads(out1.read_text()), json.loads(out2.read_text())
        assert abs(a["objective"] - b["objective"]) <= 1e-10

    def test_malformed_csv_exit_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n1,2\n3,oops\n")
        assert run(["fit", "--input", str(bad)]) == 2
        missing = tmp_path / "missing.csv"
        missing.write_text("x,y\n1,\n3,4\n")
        assert run(["fit", "--input", str(missing)]) == 2
        assert run(["fit", "--input", str(tmp_path / "nope.csv")]) == 2

    def test_bad_flags_exit_64(self, four_point_csv):
        with pytest.raises(SystemExit) as exc:
            run(["fit", "--input", four_point_csv, "--h", "not-an-int"])
        assert exc.value.code == 64
        # semantic flag errors return 64 without raising
        assert run(["fit", "--input", four_point_csv, "--h", "1"]) == 64
        assert run(["fit", "--input", four_point_csv, "--lambda1", "-1"]) == 64

    def test_solver_failure_exit_3(self, four_point_csv):
        # one sweep cannot satisfy a 1e-14 tolerance on the l1 path
        code = run([
            "fit", "--input", four_point_csv, "--h", "3",
            "--lambda1", "0.001", "--max-iter", "1", "--tol", "1e-14", "--n-starts", "2",
        ])
        assert code == 3

    def test_exact_cap_exit_64(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = ["x,y"] + [f"{rng.normal()},{rng.normal()}" for _ in range(40)]
        path = tmp_path / "big.csv"
        path.write_text("\n".join(rows) + "\n")
        code = run(["fit", "--input", str(path), "--h", "30", "--exact", "--cap", "100"])
        assert code == 64

    def test_response_column_selection(self, tmp_path, capsys):
        path = tmp_path / "named.csv"
        path.write_text("target,a\n1,0\n2,1\n3,2\n4,3\n")
        code = run(["fit", "--input", str(path), "--response", "target", "--h", "4",
                    "--lambda1", "0", "--n-starts", "3"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["feature_names"] == ["a"]
        assert doc["coefficients"]["a"] == pytest.approx(1.0, abs=1e-8)


class TestFitPath:
    def test_path_runs(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        x = rng.normal(size=30)
        y = 1.0 + 2.0 * x + 0.1 * rng.normal(size=30)
        path = tmp_path / "p.csv"
        path.write_text("x,y\n" + "\n".join(f"{a},{b}" for a, b in zip(x, y)) + "\n")
        code = run([
            "fit-path", "--input", str(path), "--grid-size", "5",
            "--lambda2-ratio", "0.5", "--n-starts", "10",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["entries"]) == 5
        lams = [e["lambda1"] for e in doc["entries"]]
        assert all(a > b for a, b in zip(lams, lams[1:]))
        assert doc["entries"][0]["n_nonzero"] == 0  # top of the grid is in the dead zone

    def test_explicit_grid(self, four_point_csv, capsys):
        code = run([
            "fit-path", "--input", four_point_csv, "--h", "3",
            "--lambda1-grid", "0.5,0.1,0.02", "--n-starts", "5",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert [e["lambda1"] for e in doc["entries"]] == [0.5, 0.1, 0.02]


class TestBounds:
    def test_reference_value(self, capsys):
        code = run([
            "bounds", "--n", "100", "--p", "10", "--h", "100",
            "--sigma", "1", "--delta", "0.1", "--norm-beta0", "1",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["prediction_bound"] == pytest.approx(5.0699, rel=1e-3)
        assert doc["q1"] == pytest.approx(0.69234, rel=1e-3)
        # every input echoed
        for key in ("n", "p", "h", "sigma", "delta", "norm_beta0", "log_L"):
            assert key in doc

    def test_lasso_pathway_marked(self, capsys):
        code = run([
            "bounds", "--n", "100", "--p", "10", "--h", "75",
            "--sigma", "1", "--delta", "0.1", "--norm-beta0", "2", "--lambda2", "0",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["lasso_regime"] is True
        assert doc["lasso_prediction_bound"] is not None

    def test_invalid_delta_exit_64(self):
        code = run([
            "bounds", "--n", "100", "--p", "10", "--h", "75",
            "--sigma", "1", "--delta", "1.5", "--norm-beta0", "1",
        ])
        assert code == 64

    def test_zero_norm_exit_65(self):
        code = run([
            "bounds", "--n", "100", "--p", "10", "--h", "75",
            "--sigma", "1", "--delta", "0.1", "--norm-beta0", "0",
        ])
        assert code == 65

    def test_beta0_file(self, tmp_path, capsys):
        beta_file = tmp_path / "beta.json"
        beta_file.write_text(json.dumps({"beta": [0.0, 1.0, -1.0]}))
        code = run([
            "bounds", "--n", "50", "--p", "3", "--h", "40",
            "--sigma", "1", "--delta", "0.1", "--beta0-file", str(beta_file),
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["norm_beta0"] == pytest.approx(2.0)


class TestSimulate:
    def test_small_run_with_artifacts(self, tmp_path):
        out = tmp_path / "report.json"
        per_trial = tmp_path / "trials.csv"
        plot = tmp_path / "plot.csv"
        code = run([
            "simulate", "--n", "30", "--p", "4", "--s0", "1", "--h", "24",
            "--trials", "6", "--seed", "3", "--n-starts", "5",
            "--output", str(out), "--per-trial-csv", str(per_trial),
            "--plot-data", str(plot),
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["mode"] == "coverage"
        assert {c["name"] for c in doc["claims"]} == {
            "prediction_bound", "cone_condition", "base_inequality", "estimation_bound"
        }
        trials_csv = per_trial.read_text().strip().splitlines()
        assert trials_csv[0] == "trial,claim,held,observed,threshold"
        assert len(trials_csv) == 1 + 6 * 4
        plot_csv = plot.read_text().strip().splitlines()
        assert plot_csv[0] == "rank,trial,realized_error,bound"
        realized = [float(line.split(",")[2]) for line in plot_csv[1:]]
        assert realized == sorted(realized)

    def test_sigma_zero_full_coverage(self, tmp_path):
        out = tmp_path / "report.json"
        code = run([
            "simulate", "--n", "30", "--p", "4", "--s0", "1", "--h", "24",
            "--sigma", "0", "--trials", "5", "--n-starts", "5", "--output", str(out),
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        claim = next(c for c in doc["claims"] if c["name"] == "prediction_bound")
        assert claim["empirical_rate"] == 1.0

    def test_zero_trials_exit_64(self):
        assert run(["simulate", "--trials", "0"]) == 64

    def test_config_file_with_flag_override(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"n": 30, "p": 4, "s0": 1, "h": 24, "trials": 4,
                                        "n_starts": 5}))
        out = tmp_path / "r.json"
        code = run(["simulate", "--config", str(cfg_file), "--trials", "3",
                    "--output", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["n_trials"] == 3  # flag overrides file
        assert doc["config"]["n"] == 30

    def test_unknown_config_key_exit_64(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"bogus": 1}))
        assert run(["simulate", "--config", str(cfg_file)]) == 64

    def test_contamination_switches_to_comparison(self, tmp_path):
        out = tmp_path / "robust.json"
        code = run([
            "simulate", "--n", "40", "--p", "4", "--s0", "1", "--h", "30",
            "--contamination-fraction", "0.2", "--contamination-magnitude", "300",
            "--trials", "5", "--n-starts", "10", "--output", str(out),
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["mode"] == "robustness_comparison"
        assert doc["trimmed_wins"] == 5


class TestVerifyTails:
    def test_small_grid_passes(self, tmp_path, capsys):
        out = tmp_path / "tails.json"
        code = run([
            "verify-tails", "--chi-h", "5,20", "--chi-t", "1",
            "--reps", "5000", "--sg-reps", "2000", "--output", str(out),
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["all_passed"] is True
        assert len(doc["cells"]) == 2 * 2 + 1  # upper+lower per cell, plus max-corr
        table = capsys.readouterr().out
        assert "chi_square_upper" in table

    def test_reps_too_small_exit_64(self):
        assert run(["verify-tails", "--reps", "10"]) == 64


class TestParser:
    def test_unknown_command_exit_64(self):
        with pytest.raises(SystemExit) as exc:
            run(["frobnicate"])
        assert exc.value.code == 64

    def test_help_lists_defaults(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["fit", "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        assert "--h" in text and "ceil(0.75*n)" in text
        assert "--n-starts" in text and "500" in text
