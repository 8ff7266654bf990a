import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from chanceboost.cli import TRACE_HEADER, main
from chanceboost.data import save_arff
from chanceboost.evaluation import run_repeated_cv
from chanceboost.learners import LearnerSpec
from conftest import constant_6040, numeric_dataset, registered_path


@pytest.fixture
def fixture_6040(tmp_path):
    path = tmp_path / "constant.arff"
    save_arff(constant_6040(50), path)
    return str(path)


@pytest.fixture
def separable_file(tmp_path):
    path = tmp_path / "separable.arff"
    save_arff(numeric_dataset(np.arange(20.0), [0] * 10 + [1] * 10), path)
    return str(path)


@pytest.fixture
def iris():
    return str(registered_path("iris"))


def run_json(capsys, *flags):
    assert main(["run", *flags]) == 0
    return json.loads(capsys.readouterr().out)


def strip_metadata(record):
    return {k: v for k, v in record.items() if k != "metadata"}


class TestRun:
    def test_record_fields(self, capsys, iris):
        rec = run_json(capsys, "--data", iris, "--learner", "stump", "--booster", "adaboost",
                       "--measure", "informedness", "--iterations", "3")
        for key in ("cell_id", "dataset", "learner", "booster", "measure", "iterations", "folds", "per_fold",
                    "means", "sds", "two_se", "stop_reasons", "rounds_run", "seed"):
            assert key in rec
        assert len(rec["per_fold"]) == 10
        assert set(rec["means"]) == {"accuracy", "kappa", "informedness", "markedness", "matthews"}
        assert rec["cell_id"] == "iris/InfD3B"
        assert sum(rec["stop_reasons"].values()) == 10

    def test_baseline_matches_library(self, capsys, iris):
        from chanceboost.data import load_arff

        rec = run_json(capsys, "--data", iris, "--learner", "stump", "--booster", "none")
        report = run_repeated_cv(load_arff(iris), LearnerSpec("stump"), seed=0)
        assert rec["means"]["informedness"] == pytest.approx(report.mean("informedness"), rel=1e-8)
        assert rec["measure"] is None and rec["iterations"] == 1

    def test_determinism(self, capsys, iris):
        flags = ("--data", iris, "--learner", "tree", "--measure", "kappa", "--iterations", "3", "--seed", "4")
        a = run_json(capsys, *flags)
        b = run_json(capsys, *flags)
        assert json.dumps(strip_metadata(a)) == json.dumps(strip_metadata(b))

    def test_json_and_csv_agree(self, capsys, tmp_path, iris):
        flags = ["--data", iris, "--learner", "nb", "--measure", "informedness", "--iterations", "2"]
        main(["run", *flags, "--format", "json", "--out", str(tmp_path / "r.json")])
        main(["run", *flags, "--format", "csv", "--out", str(tmp_path / "r.csv")])
        rec = json.loads((tmp_path / "r.json").read_text())
        rows = list(csv.DictReader(io.StringIO((tmp_path / "r.csv").read_text())))
        assert len(rows) == 10 * 5 + 3 * 5
        for row in rows:
            if row["run"]:
                fold = next(f for f in rec["per_fold"] if f["run"] == int(row["run"]) and f["fold"] == int(row["fold"]))
                assert float(row["value"]) == fold[row["metric"]]
            else:
                assert float(row["value"]) == rec[row["fold"]][row["metric"]]

    def test_registered_name(self, capsys):
        registered_path("iris")
        rec = run_json(capsys, "--data", "iris", "--booster", "none", "--runs", "1", "--folds", "3")
        assert rec["dataset"] == "iris" and len(rec["per_fold"]) == 3

    def test_invalid_measure(self, capsys, iris):
        with pytest.raises(SystemExit) as info:
            main(["run", "--data", iris, "--measure", "f1"])
        assert info.value.code != 0
        assert "usage:" in capsys.readouterr().err

    def test_none_with_iterations(self, capsys, iris):
        assert main(["run", "--data", iris, "--booster", "none", "--iterations", "5"]) == 2
        assert "iterations" in capsys.readouterr().err

    def test_missing_file(self, capsys, tmp_path):
        assert main(["run", "--data", str(tmp_path / "nope.arff")]) != 0

    def test_unreadable_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.arff"
        bad.write_text("@relation r\n@attribute c {a,b}\n@data\nz\n")
        assert main(["run", "--data", str(bad)]) == 1
        assert "line 4" in capsys.readouterr().err

    def test_module_entry_point(self, iris):
        out = subprocess.run([sys.executable, "-m", "chanceboost", "run", "--data", iris, "--booster", "none",
                              "--format", "csv", "--runs", "1", "--folds", "2"], capture_output=True, text=True)
        assert out.returncode == 0
        assert out.stdout.startswith("cell_id,dataset,")


class TestSuite:
    def write(self, tmp_path, spec):
        path = tmp_path / "suite.json"
        path.write_text(json.dumps(spec))
        return str(path)

    def test_two_cells(self, capsys, tmp_path, iris):
        spec = {
            "seed": 0, "runs": 2, "folds": 5, "output": str(tmp_path / "out"), "baseline": "DS",
            "datasets": {"iris": iris},
            "cells": [
                {"dataset": "iris", "learner": "stump", "booster": "none"},
                {"dataset": "iris", "learner": "stump", "measure": "informedness", "iterations": 26},
            ],
        }
        assert main(["suite", self.write(tmp_path, spec)]) == 0
        out = tmp_path / "out"
        assert sorted(p.name for p in (out / "records").iterdir()) == ["iris_DS.json", "iris_InfD26B.json"]
        rows = list(csv.DictReader((out / "comparisons.csv").open()))
        assert len(rows) == 1
        assert rows[0]["method"] == "InfD26B" and rows[0]["reference"] == "DS"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["failures"] == {}
        assert "InfD26B" in (out / "summary.txt").read_text()

    def test_grid_and_tallies(self, capsys, tmp_path, iris, separable_file):
        spec = {
            "output": str(tmp_path / "out"), "runs": 1, "folds": 2, "baseline": "DS", "treeline": "RT",
            "datasets": {"iris": iris, "sep": separable_file},
            "methods": [
                {"learner": "stump", "booster": "none"},
                {"learner": "tree", "booster": "none"},
                {"learner": "tree", "measure": "informedness", "iterations": 3},
            ],
        }
        assert main(["suite", self.write(tmp_path, spec), "--jobs", "2"]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        tallies = summary["comparisons"]["treeline"]["methods"]["InfRT3B"]["tally"]
        assert sum(tallies.values()) == 2
        assert set(summary["grid"]) == {"DS", "RT", "InfRT3B"}

    def test_duplicate_ids(self, capsys, tmp_path, iris):
        cell = {"id": "x", "dataset": iris, "booster": "none"}
        spec = {"output": str(tmp_path / "out"), "cells": [cell, cell]}
        assert main(["suite", self.write(tmp_path, spec)]) == 2
        assert "duplicate" in capsys.readouterr().err

    def test_failing_cell_is_recorded(self, capsys, tmp_path, iris):
        bad = tmp_path / "bad.arff"
        bad.write_text("@relation r\n@attribute c {a,b}\n@data\nq\n")
        spec = {
            "output": str(tmp_path / "out"), "runs": 1, "folds": 2,
            "datasets": {"iris": iris, "bad": str(bad)},
            "cells": [{"dataset": "bad", "booster": "none"}, {"dataset": "iris", "booster": "none"}],
        }
        assert main(["suite", self.write(tmp_path, spec)]) == 1
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert list(summary["failures"]) == ["bad/DS"]
        assert (tmp_path / "out" / "records" / "iris_DS.json").exists()

    def test_empty_suite(self, capsys, tmp_path):
        assert main(["suite", self.write(tmp_path, {"cells": []})]) == 2


class TestTrace:
    def read(self, path):
        with open(path) as fh:
            return list(csv.reader(fh))

    def test_perfect_first_round(self, capsys, tmp_path, separable_file):
        out = tmp_path / "t.csv"
        assert main(["trace", "--data", separable_file, "--measure", "informedness", "--iterations", "10",
                     "--trace", str(out)]) == 0
        rows = self.read(out)
        assert rows[0] == TRACE_HEADER
        assert len(rows) == 2
        assert float(rows[1][2]) == 0.0

    def test_surrender_marker(self, capsys, tmp_path, fixture_6040):
        out = tmp_path / "t.csv"
        main(["trace", "--data", fixture_6040, "--measure", "informedness", "--iterations", "10", "--trace", str(out)])
        rows = self.read(out)
        assert len(rows) == 2
        assert rows[1][0] == "1:surrendered"
        assert float(rows[1][2]) == 0.5

    def test_accuracy_keeps_rounds(self, capsys, tmp_path, fixture_6040):
        out = tmp_path / "t.csv"
        main(["trace", "--data", fixture_6040, "--measure", "accuracy", "--iterations", "10", "--trace", str(out)])
        kept = [r for r in self.read(out)[1:] if r[0].isdigit()]
        assert len(kept) >= 1
        assert float(kept[0][3]) == pytest.approx(2 / 3)

    def test_needs_booster(self, capsys, tmp_path, fixture_6040):
        assert main(["trace", "--data", fixture_6040, "--booster", "none", "--trace", str(tmp_path / "t")]) == 2


def test_validate_command(capsys, iris):
    assert main(["validate", "--data", iris]) == 0
    assert "iris: ok" in capsys.readouterr().out
