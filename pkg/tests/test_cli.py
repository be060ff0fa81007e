import csv
import hashlib
import json

import numpy as np
import pytest

from touchtell.cli import run
from touchtell.core import read_recording_csv, write_recording_csv
from touchtell.sensor import scan_movie


def tree_digest(root):
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(root)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def study(tmp_path_factory):
    """Six participants, both tasks, features extracted."""
    out = tmp_path_factory.mktemp("study")
    assert run(["synth", "--seed", "3", "--participants", "6", "--out", str(out)]) == 0
    assert run(["extract", "--out", str(out), "--jobs", "2"]) == 0
    return out


def test_synth_is_reproducible(tmp_path):
    args = ["synth", "--task", "gesture", "--seed", "7", "--participants", "2"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")


def test_synth_needs_seed(tmp_path, capsys):
    assert run(["synth", "--out", str(tmp_path)]) == 2
    assert "error kind=usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert run(["synth", "--bogus"]) == 2


def test_missing_features_exit_three(tmp_path, capsys):
    assert run(["analyze", "icc", "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert "error kind=missing" in err and "features.csv" in err


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TOUCHTELL_DIR", str(tmp_path))
    assert run(["synth", "--task", "gesture", "--seed", "1", "--participants", "2"]) == 0
    assert (tmp_path / "manifest.jsonl").exists()


def test_stream_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    rec = scan_movie(rng.random((450, 5, 5)), np.arange(450) * 22, rng=rng)
    src = tmp_path / "x.csv"
    write_recording_csv(rec, src)
    assert run(["stream", "--input", str(src), "--output", str(tmp_path / "x.tws")]) == 0
    assert run(["decode-stream", "--input", str(tmp_path / "x.tws"),
                "--output", str(tmp_path / "y.csv")]) == 0
    assert (tmp_path / "y.csv").read_bytes() == src.read_bytes()
    assert read_recording_csv(tmp_path / "y.csv") == rec


def test_corrupt_stream_is_an_error(tmp_path, capsys):
    (tmp_path / "bad.tws").write_bytes(b"\x00" * 59)
    assert run(["decode-stream", "--input", str(tmp_path / "bad.tws")]) == 1
    assert capsys.readouterr().err.startswith("error kind=")


def test_extract_writes_one_row_per_trial(study):
    with open(study / "features.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 6 * 3 * 16
    assert rows[0][:5] == ["participant_id", "round", "task", "label", "mean_pressure"]


def test_analyze_icc_gesture_rows(study):
    assert run(["analyze", "icc", "--task", "gesture", "--out", str(study)]) == 0
    with open(study / "icc_gesture.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["label"] for r in rows] == ["Hold", "Pat", "Poke", "Rub", "Tap", "Tickle"]


def test_analyze_permanova_is_deterministic(study):
    args = ["analyze", "permanova", "--task", "gesture", "--seed", "2", "--permutations", "99",
            "--out", str(study)]
    assert run(args) == 0
    first = (study / "permanova_pairwise_gesture.csv").read_bytes()
    assert run(args) == 0
    assert (study / "permanova_pairwise_gesture.csv").read_bytes() == first
    assert len(first.decode().splitlines()) == 1 + 15


def test_train_and_report(study, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"dt": {"max_depth": [3, None]},
                                "rf": {"n_estimators": [20], "max_depth": [None]},
                                "svm": {"C": [1.0]}}))
    assert run(["train", "--task", "gesture", "--model", "svm", "--seed", "1", "--grid",
                str(grid), "--n-train", "4", "--folds", "4", "--out", str(study)]) == 0
    model = json.loads((study / "models" / "gesture_fused_svm.json").read_text())
    assert model["kind"] == "svm" and len(model["metadata"]["train_participants"]) == 4
    args = ["report", "--seed", "1", "--grid", str(grid), "--runs", "2", "--n-train", "4",
            "--folds", "4", "--out", str(study)]
    assert run(args) == 0
    first = (study / "report" / "report.json").read_bytes()
    assert run(args + ["--jobs", "3"]) == 0
    assert (study / "report" / "report.json").read_bytes() == first
    assert len(json.loads(first)["cells"]) == 18
