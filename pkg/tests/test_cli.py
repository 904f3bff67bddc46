"""Command-line interface tests (in-process)."""

import csv
import json

import numpy as np
import pytest

from synthratio import __version__
from synthratio.cli import main
from synthratio.simlab import gen_univariate


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return str(path)


@pytest.fixture()
def gaussian_pair(tmp_path):
    rng = np.random.default_rng(0)
    obs = tmp_path / "obs.csv"
    syn = tmp_path / "syn.csv"
    write_csv(obs, ["x", "z"], rng.normal(size=(80, 2)).round(6).tolist())
    write_csv(syn, ["x", "z"], rng.normal(0.3, 1, size=(80, 2)).round(6).tolist())
    return str(obs), str(syn)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEvaluate:
    def test_report_matches_schema(self, capsys, gaussian_pair, tmp_path):
        import importlib.resources

        import jsonschema

        obs, syn = gaussian_pair
        json_path = tmp_path / "report.json"
        code, out, _ = run(
            capsys, "evaluate", obs, syn, "--centers", "30", "--seed", "3",
            "--knn", "auto", "--pmse", "logit", "--json", str(json_path),
        )
        assert code == 0
        report = json.loads(out)
        schema = json.loads(
            importlib.resources.files("synthratio")
            .joinpath("report_schema.json")
            .read_text()
        )
        jsonschema.validate(report, schema)
        assert report["global"]["pearson_divergence"] is not None
        assert report["global"]["kl_knn"] is not None
        assert report["global"]["pmse_ratio"] is not None
        assert json.loads(json_path.read_text()) == report

    def test_report_is_reproducible(self, capsys, gaussian_pair):
        obs, syn = gaussian_pair
        _, out1, _ = run(capsys, "evaluate", obs, syn, "--centers", "30", "--seed", "5")
        _, out2, _ = run(capsys, "evaluate", obs, syn, "--centers", "30", "--seed", "5")
        assert out1 == out2

    def test_loocv_flag_recorded(self, capsys, gaussian_pair):
        obs, syn = gaussian_pair
        code, out, _ = run(capsys, "evaluate", obs, syn, "--centers", "20",
                           "--cv", "loocv")
        assert code == 0
        assert json.loads(out)["fit"]["cv_method"] == "loocv"

    def test_ratios_export(self, capsys, gaussian_pair, tmp_path):
        obs, syn = gaussian_pair
        ratios = tmp_path / "ratios.csv"
        code, out, _ = run(
            capsys, "evaluate", obs, syn, "--centers", "30",
            "--ratios", str(ratios),
        )
        assert code == 0
        with open(ratios, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["table", "row", "ratio"]
        assert len(rows) == 1 + 160
        values = [float(r[2]) for r in rows[1:]]
        assert min(values) >= 0  # truncation is the default
        report = json.loads(out)
        assert report["per_record_ratios"]["truncated"] is True
        np.testing.assert_allclose(
            report["per_record_ratios"]["observed"], values[:80]
        )

    def test_missing_file_exit_2_no_output(self, capsys, tmp_path):
        code, out, err = run(capsys, "evaluate", str(tmp_path / "nope.csv"),
                             str(tmp_path / "nope2.csv"))
        assert code == 2
        assert out == ""
        assert "nope" in err

    def test_schema_mismatch_exit_2(self, capsys, tmp_path):
        a = write_csv(tmp_path / "a.csv", ["x"], [[1.0], [2.0]])
        b = write_csv(tmp_path / "b.csv", ["y"], [[1.0], [2.0]])
        code, out, err = run(capsys, "evaluate", a, b)
        assert code == 2
        assert out == ""

    def test_permutation_test_null_calibrated_across_seeds(self, capsys, tmp_path):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((60, 1)).round(6).tolist()
        path = write_csv(tmp_path / "same.csv", ["x"], data)
        large = 0
        for seed in range(10):
            code, out, _ = run(
                capsys, "evaluate", path, path, "--test", "199",
                "--seed", str(seed),
            )
            assert code == 0
            p = json.loads(out)["test"]["p_value"]
            large += p >= 0.05
        assert large >= 9

    def test_scenario_ordering_lognormal_vs_normal(self, capsys, tmp_path):
        pes = {}
        for scenario in ("lognormal", "normal"):
            observed, synthetic = gen_univariate(scenario, 250, seed=17)
            obs = write_csv(tmp_path / f"{scenario}_obs.csv", ["x"],
                            [[v] for v in observed])
            syn = write_csv(tmp_path / f"{scenario}_syn.csv", ["x"],
                            [[v] for v in synthetic])
            _, out, _ = run(capsys, "evaluate", obs, syn, "--seed", "2")
            pes[scenario] = json.loads(out)["global"]["pearson_divergence"]
        assert pes["lognormal"] > pes["normal"]


class TestCompare:
    def test_self_candidate_wins(self, capsys, tmp_path):
        rng = np.random.default_rng(2)
        obs_rows = rng.normal(size=(60, 1)).round(6).tolist()
        obs = write_csv(tmp_path / "obs.csv", ["x"], obs_rows)
        good = write_csv(tmp_path / "good.csv", ["x"], obs_rows)
        bad = write_csv(tmp_path / "bad.csv", ["x"],
                        rng.normal(3, 1, size=(60, 1)).round(6).tolist())
        code, out, _ = run(capsys, "compare", obs, bad, good, "--centers", "30")
        assert code == 0
        ranking = json.loads(out)["ranking"]
        assert ranking[0]["path"] == good
        assert ranking[0]["rank"] == 1

    def test_duplicate_candidates_stable_tie(self, capsys, tmp_path):
        rng = np.random.default_rng(3)
        obs = write_csv(tmp_path / "obs.csv", ["x"],
                        rng.normal(size=(50, 1)).round(6).tolist())
        rows = rng.normal(size=(50, 1)).round(6).tolist()
        c1 = write_csv(tmp_path / "c1.csv", ["x"], rows)
        c2 = write_csv(tmp_path / "c2.csv", ["x"], rows)
        code, out, _ = run(capsys, "compare", obs, c1, c2, "--centers", "20")
        ranking = json.loads(out)["ranking"]
        assert ranking[0]["pearson_divergence"] == ranking[1]["pearson_divergence"]
        assert [e["path"] for e in ranking] == [c1, c2]  # argument order

    def test_needs_two_candidates(self, capsys, tmp_path):
        rng = np.random.default_rng(4)
        obs = write_csv(tmp_path / "obs.csv", ["x"],
                        rng.normal(size=(30, 1)).tolist())
        code, _, err = run(capsys, "compare", obs, obs)
        assert code == 1


class TestSimulate:
    def test_zero_reps_usage_error(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "univariate", "--reps", "0",
                  "--out-dir", str(tmp_path)])
        assert exc.value.code == 1

    def test_univariate_outputs(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "univariate", "--scenario", "normal",
            "--n", "60", "--reps", "3", "--seed", "1",
            "--out-dir", str(tmp_path),
        )
        assert code == 0
        report = json.loads(out)
        with open(tmp_path / "univariate_normal_grid.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x", "mean_ratio", "mean_ratio_knn", "true_ratio"]
        assert len(rows) == 42
        truth = [float(r[3]) for r in rows[1:]]
        np.testing.assert_allclose(truth, 1.0)
        with open(tmp_path / "univariate_normal_scores.csv", newline="") as fh:
            scores = list(csv.reader(fh))
        assert len(scores) == 4
        assert report["files"]["grid"].endswith("univariate_normal_grid.csv")

    def test_multivariate_outputs(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "multivariate", "--n", "60", "--D", "5",
            "--reps", "2", "--measures", "KL_1,PE", "--seed", "2",
            "--out-dir", str(tmp_path),
        )
        assert code == 0
        report = json.loads(out)
        assert set(report["proportions"]) == {"KL_1", "PE"}
        with open(tmp_path / "multivariate_proportions.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "D", "KL_1", "PE"]
        saved = json.loads((tmp_path / "multivariate_proportions.json").read_text())
        assert saved["proportions"] == report["proportions"]
        with open(tmp_path / "multivariate_scores.csv", newline="") as fh:
            scores = list(csv.reader(fh))
        assert len(scores) == 1 + 2 * 2 * 3

    def test_unknown_measure_usage_error(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "simulate", "multivariate", "--reps", "1",
            "--measures", "WAT", "--out-dir", str(tmp_path),
        )
        assert code == 1
        assert "WAT" in err


class TestReweight:
    def test_identical_tables_equal_columns(self, capsys, tmp_path):
        rng = np.random.default_rng(5)
        x = rng.normal(size=60)
        y = 2 * x + rng.normal(size=60)
        rows = np.column_stack([y, x]).round(6).tolist()
        obs = write_csv(tmp_path / "obs.csv", ["y", "x"], rows)
        syn = write_csv(tmp_path / "syn.csv", ["y", "x"], rows)
        code, out, _ = run(capsys, "reweight", obs, syn, "--formula", "y ~ x",
                           "--centers", "30")
        assert code == 0
        lines = list(csv.reader(out.splitlines()))
        assert lines[0] == ["term", "observed", "synthetic", "reweighted"]
        for row in lines[1:]:
            a, b, c = map(float, row[1:])
            # same rows, same OLS: observed and synthetic columns coincide;
            # the reweighted column deviates only by the ridge shrinkage in
            # the near-unit weights
            assert a == pytest.approx(b, abs=1e-12)
            assert a == pytest.approx(c, abs=0.2)

    def test_categorical_predictor_expands(self, capsys, tmp_path):
        rng = np.random.default_rng(6)
        n = 60
        g = rng.choice(["u", "v", "w"], n)
        y = rng.normal(size=n)
        rows = [[round(y[i], 6), g[i]] for i in range(n)]
        obs = write_csv(tmp_path / "obs.csv", ["y", "g"], rows)
        rows2 = [[round(v, 6), lab] for v, lab in
                 zip(rng.normal(size=n), rng.choice(["u", "v", "w"], n))]
        syn = write_csv(tmp_path / "syn.csv", ["y", "g"], rows2)
        code, out, _ = run(capsys, "reweight", obs, syn, "--formula", "y ~ g",
                           "--centers", "30")
        assert code == 0
        lines = list(csv.reader(out.splitlines()))
        assert [r[0] for r in lines[1:]] == ["Intercept", "g=v", "g=w"]

    def test_weights_export_and_json(self, capsys, tmp_path, gaussian_pair):
        obs, syn = gaussian_pair
        wpath = tmp_path / "weights.csv"
        jpath = tmp_path / "rw.json"
        code, out, _ = run(
            capsys, "reweight", obs, syn, "--formula", "x ~ z",
            "--centers", "30", "--weights-out", str(wpath), "--json", str(jpath),
        )
        assert code == 0
        with open(wpath, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["weight"]
        weights = np.array([float(r[0]) for r in rows[1:]])
        assert weights.shape == (80,)
        assert abs(weights.mean() - 1.0) < 1e-10  # normalized by default
        payload = json.loads(jpath.read_text())
        assert payload["terms"] == ["Intercept", "z"]

    def test_unknown_formula_column_exit_2(self, capsys, gaussian_pair):
        obs, syn = gaussian_pair
        code, out, _ = run(capsys, "reweight", obs, syn, "--formula", "x ~ q")
        assert code == 2


class TestFitPredict:
    def test_round_trip(self, capsys, tmp_path, gaussian_pair):
        obs, syn = gaussian_pair
        fit_path = tmp_path / "fit.json"
        code, out, _ = run(capsys, "fit", obs, syn, "--out", str(fit_path),
                           "--centers", "30", "--seed", "9")
        assert code == 0
        summary = json.loads(out)
        assert summary["file"] == str(fit_path)

        code, out, _ = run(capsys, "predict", str(fit_path), syn)
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["row", "ratio"]
        assert len(rows) == 81
        predicted = np.array([float(r[1]) for r in rows[1:]])

        # must agree bit for bit with ratios exported at fit time
        ratios_path = tmp_path / "ratios.csv"
        run(capsys, "evaluate", obs, syn, "--centers", "30", "--seed", "9",
            "--ratios", str(ratios_path))
        with open(ratios_path, newline="") as fh:
            expected = [float(r[2]) for r in list(csv.reader(fh))[1:] if r[0] == "synthetic"]
        np.testing.assert_array_equal(predicted, np.array(expected))

    def test_predict_without_encoder_exit_2(self, capsys, tmp_path, gaussian_pair):
        from synthratio.ulsif import UlsifEstimator

        rng = np.random.default_rng(10)
        est = UlsifEstimator(n_centers=10).fit(rng.normal(size=(20, 1)),
                                               rng.normal(size=(20, 1)))
        path = tmp_path / "bare.json"
        est.save_json(path)
        obs, _ = gaussian_pair
        code, out, _ = run(capsys, "predict", str(path), obs)
        assert code == 2


class TestParserBasics:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_no_subcommand_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1
