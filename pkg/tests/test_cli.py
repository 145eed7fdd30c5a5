import csv
import json
from pathlib import Path

import numpy as np
import pytest

from softhad.cli import main
from softhad.datasets import load_dataset


def run(*args):
    return main([str(a) for a in args])


def read_bytes(directory, names):
    return {name: (Path(directory) / name).read_bytes() for name in names}


@pytest.fixture
def gen_dir(tmp_path):
    out = tmp_path / "data"
    code = run("gen", "--preset", "d1", "--n-per-class", 60, "--flip-rate", 0.03,
               "--seed", 3, "--out", out)
    assert code == 0
    return out


class TestGen:
    def test_files_exist_and_manifest_validates(self, gen_dir):
        for name in ("features.csv", "dataset.json", "manifest.json", "config.txt"):
            assert (gen_dir / name).exists()
        manifest = json.loads((gen_dir / "manifest.json").read_text())
        assert manifest["command"] == "gen"
        assert manifest["seed"] == 3
        assert manifest["n"] == 240
        assert len(manifest["config_hash"]) == 64

    def test_flip_indices_recorded(self, tmp_path):
        out = tmp_path / "flips"
        run("gen", "--preset", "d2", "--n-per-class", 250, "--flip-rate", 0.03,
            "--seed", 0, "--out", out)
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["flipped_indices"]) == 30

    def test_identical_invocation_identical_hash_and_bytes(self, tmp_path):
        names = ("features.csv", "dataset.json", "manifest.json", "config.txt")
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            run("gen", "--preset", "d1", "--n-per-class", 40, "--seed", 9, "--out", out)
        assert read_bytes(a, names) == read_bytes(b, names)

    def test_mixture_config_source(self, tmp_path):
        config = {
            "prior_positive": 0.5,
            "positive": [{"weight": 1.0, "mean": [2.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}],
            "negative": [{"weight": 1.0, "mean": [-2.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}],
        }
        path = tmp_path / "model.json"
        path.write_text(json.dumps(config))
        out = tmp_path / "custom"
        assert run("gen", "--mixture-config", path, "--n-per-class", 20, "--out", out) == 0
        assert load_dataset(out).n == 80

    def test_missing_source_errors(self, tmp_path, capsys):
        code = run("gen", "--n-per-class", 10, "--out", tmp_path / "x")
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert "preset" in err["message"]


class TestScore:
    def test_report_and_histogram(self, gen_dir, tmp_path):
        out = tmp_path / "scored"
        assert run("score", "--data", gen_dir, "--method", "softhad",
                   "--feature-weights", "uniform", "--out", out) == 0
        with open(out / "report.csv") as fh:
            rows = list(csv.DictReader(fh))
        ds = load_dataset(gen_dir)
        assert len(rows) == len(ds.recent_indices)
        assert [int(r["instance_id"]) for r in rows] == ds.recent_indices.tolist()
        ranks = sorted(int(r["rank"]) for r in rows)
        assert ranks == list(range(1, len(rows) + 1))
        with open(out / "histogram.csv") as fh:
            hist = list(csv.DictReader(fh))
        assert len(hist) == 50
        assert sum(int(r["count"]) for r in hist) == len(rows)

    def test_methods_share_instance_ids(self, gen_dir, tmp_path):
        reports = {}
        for method in ("softhad", "wknn"):
            out = tmp_path / method
            assert run("score", "--data", gen_dir, "--method", method,
                       "--feature-weights", "uniform", "--out", out) == 0
            with open(out / "report.csv") as fh:
                reports[method] = [r["instance_id"] for r in csv.DictReader(fh)]
        assert reports["softhad"] == reports["wknn"]

    def test_scaled_column_populated_when_scaling(self, gen_dir, tmp_path):
        out = tmp_path / "scaled"
        assert run("score", "--data", gen_dir, "--method", "softhad",
                   "--feature-weights", "uniform", "--scale", "--out", out) == 0
        with open(out / "report.csv") as fh:
            rows = list(csv.DictReader(fh))
        scaled = np.array([float(r["scaled"]) for r in rows])
        raw = np.array([float(r["raw"]) for r in rows])
        np.testing.assert_array_equal(np.argsort(scaled), np.argsort(raw))

    def test_byte_identical_reruns(self, gen_dir, tmp_path):
        names = ("report.csv", "histogram.csv", "manifest.json", "config.txt")
        a, b = tmp_path / "s1", tmp_path / "s2"
        for out in (a, b):
            assert run("score", "--data", gen_dir, "--method", "softhad",
                       "--feature-weights", "uniform", "--seed", 5, "--out", out) == 0
        assert read_bytes(a, names) == read_bytes(b, names)

    def test_rerun_from_persisted_config(self, gen_dir, tmp_path):
        first = tmp_path / "first"
        assert run("score", "--data", gen_dir, "--method", "wknn",
                   "--feature-weights", "uniform", "--seed", 2, "--out", first) == 0
        second = tmp_path / "second"
        assert run("score", "--config", first / "config.txt", "--out", second) == 0
        assert (first / "report.csv").read_bytes() == (second / "report.csv").read_bytes()
        assert (first / "config.txt").read_bytes() == (second / "config.txt").read_bytes()

    def test_qda_method(self, gen_dir, tmp_path):
        out = tmp_path / "qda"
        assert run("score", "--data", gen_dir, "--method", "qda", "--out", out) == 0
        with open(out / "report.csv") as fh:
            raw = [float(r["raw"]) for r in csv.DictReader(fh)]
        assert all(0.0 <= v <= 1.0 for v in raw)

    def test_ordinal_csv_input(self, tmp_path):
        rows = ["%f,%f,%f" % (i * 0.1, i * 0.2, i) for i in range(30)]
        path = tmp_path / "ordinal.csv"
        path.write_text("a,b,resp\n" + "\n".join(rows) + "\n")
        out = tmp_path / "csv_scored"
        assert run("score", "--csv", path, "--response-column", "resp",
                   "--method", "softhad", "--feature-weights", "uniform",
                   "--k", 5, "--out", out) == 0
        assert (out / "report.csv").exists()

    def test_error_emits_json(self, tmp_path, capsys):
        code = run("score", "--data", tmp_path / "missing", "--out", tmp_path / "o")
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"]

    def test_top_ranked_inspectable_against_flip_manifest(self, tmp_path):
        data = tmp_path / "d3_data"
        run("gen", "--preset", "d3", "--n-per-class", 300, "--flip-rate", 0.03,
            "--seed", 1, "--out", data)
        out = tmp_path / "d3_scored"
        assert run("score", "--data", data, "--method", "softhad",
                   "--feature-weights", "uniform", "--seed", 1, "--out", out) == 0
        flipped = set(json.loads((data / "manifest.json").read_text())["flipped_indices"])
        with open(out / "report.csv") as fh:
            rows = list(csv.DictReader(fh))
        top5 = [int(r["instance_id"]) for r in rows if int(r["rank"]) <= 5]
        assert sum(1 for i in top5 if i in flipped) >= 4


class TestEval:
    def test_self_evaluation_of_truth_is_one(self, gen_dir, tmp_path):
        # a report whose raw scores are the true scores themselves
        ds = load_dataset(gen_dir)
        report = tmp_path / "truth_report.csv"
        with open(report, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", "raw", "scaled", "rank", "task"])
            for i in ds.recent_indices:
                writer.writerow([int(i), repr(float(ds.true_scores[i])), "", 1, 0])
        out = tmp_path / "eval"
        assert run("eval", "--report", report, "--truth", gen_dir, "--out", out) == 0
        with open(out / "eval.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert float(rows[0]["agreement"]) == 1.0

    def test_three_reports_three_rows(self, gen_dir, tmp_path):
        reports = []
        for method in ("softhad", "wknn", "qda"):
            out = tmp_path / ("m_" + method)
            assert run("score", "--data", gen_dir, "--method", method,
                       "--feature-weights", "uniform", "--out", out) == 0
            reports.extend(["--report", out / "report.csv"])
        out = tmp_path / "table"
        assert run("eval", *reports, "--truth", gen_dir, "--out", out) == 0
        with open(out / "eval.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3

    def test_mismatched_ids_rejected(self, gen_dir, tmp_path, capsys):
        report = tmp_path / "bad.csv"
        with open(report, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", "raw", "scaled", "rank", "task"])
            writer.writerow([0, "0.5", "", 1, 0])
        code = run("eval", "--report", report, "--truth", gen_dir, "--out", tmp_path / "e")
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert "instance ids" in err["message"]


class TestSweep:
    def test_curve_schema_and_default_row(self, tmp_path):
        out = tmp_path / "sweep"
        assert run("sweep", "--preset", "d2", "--axis", "gamma_g",
                   "--grid", "0.5,1,2", "--runs", 2, "--n-per-class", 40,
                   "--out", out) == 0
        with open(out / "curve.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["value"]) for r in rows] == [0.5, 1.0, 2.0]
        assert all(r["method"] == "softhad" for r in rows)
        assert any(float(r["value"]) == 1.0 for r in rows)

    def test_graph_size_axis(self, tmp_path):
        out = tmp_path / "gs"
        assert run("sweep", "--preset", "d2", "--axis", "graph_size",
                   "--grid", "20,40", "--runs", 2, "--n-per-class", 40,
                   "--out", out) == 0
        with open(out / "curve.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["value"]) for r in rows] == [20.0, 40.0]

    def test_byte_identical_reruns(self, tmp_path):
        names = ("curve.csv", "manifest.json", "config.txt")
        a, b = tmp_path / "sw1", tmp_path / "sw2"
        for out in (a, b):
            assert run("sweep", "--preset", "d2", "--axis", "gamma_g",
                       "--grid", "1", "--runs", 2, "--n-per-class", 30,
                       "--seed", 11, "--out", out) == 0
        assert read_bytes(a, names) == read_bytes(b, names)


class TestOutputDirEnv:
    def test_env_var_default(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("SOFTHAD_OUTPUT_DIR", str(target))
        assert run("gen", "--preset", "d1", "--n-per-class", 15) == 0
        assert (target / "manifest.json").exists()
