import json

import pytest

from instaudit.cli import run
from instaudit.data_model import generate_synthetic_dataset


@pytest.fixture
def fake_file(tmp_path):
    path = tmp_path / "fake.json"
    path.write_text(generate_synthetic_dataset("fake", 150, 40, seed=0).to_json())
    return path


@pytest.fixture
def auto_file(tmp_path):
    path = tmp_path / "auto.json"
    path.write_text(generate_synthetic_dataset("automated", 60, 60, seed=0).to_json())
    return path


def test_usage_errors(capsys):
    assert run([]) == 2
    assert run(["evaluate", "--classifier", "knn"]) == 2
    assert run(["ingest"]) == 2
    assert run(["reproduce"]) == 2


def test_missing_file_is_data_error(tmp_path, capsys):
    assert run(["ingest", "--dataset", str(tmp_path / "nope.json")]) == 3
    assert "no such file" in capsys.readouterr().err


def test_domain_violation_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    rec = dict(media_count=1, follower_count=-3, following_count=2, username_digit_count=0,
               is_private=0, label="real")
    path.write_text(json.dumps({"schema": "fake", "records": [rec]}))
    assert run(["ingest", "--dataset", str(path)]) == 3
    assert "domain violation" in capsys.readouterr().err


def test_wrong_schema_for_command(auto_file):
    assert run(["oversample", "--dataset", str(auto_file)]) == 3


def test_ingest_round_trip(fake_file, tmp_path, capsys):
    out = tmp_path / "canon.json"
    assert run(["ingest", "--dataset", str(fake_file), "--out", str(out)]) == 0
    assert json.loads(out.read_text()) == json.loads(fake_file.read_text())
    assert "real=150" in capsys.readouterr().out


def test_synthesize(tmp_path):
    out = tmp_path / "s.json"
    assert run(["synthesize", "--schema", "automated", "--n-real", "5", "--n-positive", "7",
                "--seed", "3", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["records"]) == 12


def test_oversample_balances(fake_file, tmp_path):
    out = tmp_path / "bal.json"
    assert run(["oversample", "--dataset", str(fake_file), "--out", str(out)]) == 0
    labels = [r["label"] for r in json.loads(out.read_text())["records"]]
    assert labels.count("real") == labels.count("fake") == 150


def test_evaluate_report(fake_file, tmp_path):
    out = tmp_path / "r.json"
    assert run(["evaluate", "--dataset", str(fake_file), "--classifier", "svm", "--oversample",
                "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["classifier"] == "svm_rbf"
    assert report["tp"] + report["fp"] + report["tn"] + report["fn"] == 57
    assert 0.0 <= report["macro_f1"] <= 1.0


def test_train_then_score_saved_model(fake_file, tmp_path):
    model = tmp_path / "m.json"
    report = tmp_path / "r.json"
    assert run(["train", "--dataset", str(fake_file), "--classifier", "logreg",
                "--out", str(model)]) == 0
    assert json.loads(model.read_text())["kind"] == "logreg"
    assert run(["evaluate", "--dataset", str(fake_file), "--model", str(model),
                "--out", str(report)]) == 0
    assert json.loads(report.read_text())["tp"] + json.loads(report.read_text())["fn"] == 40


def test_select_features_trace(auto_file, tmp_path):
    out = tmp_path / "trace.json"
    assert run(["select-features", "--dataset", str(auto_file), "--generations", "2",
                "--population", "4", "--out", str(out)]) == 0
    trace = json.loads(out.read_text())
    assert [t["generation"] for t in trace] == [0, 1, 2]
    fits = [t["best_fitness"] for t in trace]
    assert fits == sorted(fits)


def test_reproduce_fake_markdown(fake_file, tmp_path):
    out = tmp_path / "t.md"
    assert run(["reproduce", "--schema", "fake", "--dataset", str(fake_file), "--paper-mode",
                "--format", "md", "--out", str(out)]) == 0
    text = out.read_text()
    assert "Support Vector Machine" in text and text.startswith("|")


def test_reproduce_is_byte_identical(fake_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run(["reproduce", "--schema", "fake", "--dataset", str(fake_file),
                    "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
