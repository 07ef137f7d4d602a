import json
from pathlib import Path

import numpy as np
import pytest

from dsadetect.cli import main
from dsadetect.dsa import batch_dsa
from dsadetect.report import load_manifest, load_report_json, read_scores_csv
from dsadetect.traceio import load_labels, load_trace_file, save_labels, save_trace_file
from dsadetect.traces import LabeledTraceSet, TraceSet

DEMO_FLAGS = ["--epochs", "60", "--seed", "0", "--variant", "dsa1"]


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    assert main(["demo", "--out", str(out), *DEMO_FLAGS]) == 0
    return out


def write_pair(tmp_path, rows_train, labels_train, rows_test, labels_test, preds_test=None):
    """Write a minimal trace/label quartet and return the flag list."""
    preds_test = labels_test if preds_test is None else preds_test
    paths = {
        "train_traces": tmp_path / "train_layer.atrc",
        "train_labels": tmp_path / "train.albl",
        "test_traces": tmp_path / "test_layer.atrc",
        "test_labels": tmp_path / "test.albl",
    }
    save_trace_file(TraceSet(rows_train), paths["train_traces"])
    save_labels(labels_train, labels_train, paths["train_labels"])
    save_trace_file(TraceSet(rows_test), paths["test_traces"])
    save_labels(labels_test, preds_test, paths["test_labels"])
    return [
        "--train-traces", str(paths["train_traces"]),
        "--train-labels", str(paths["train_labels"]),
        "--test-traces", str(paths["test_traces"]),
        "--test-labels", str(paths["test_labels"]),
    ]


# ------------------------------------------------------------------- demo


def test_demo_writes_expected_artifacts(demo_dir, capsys):
    for tap in ("hidden1", "hidden2", "output"):
        assert (demo_dir / f"train_{tap}.atrc").is_file()
        assert (demo_dir / f"test_{tap}.atrc").is_file()
        assert (demo_dir / f"scores_{tap}_dsa1.csv").is_file()
    assert (demo_dir / "train.albl").is_file()
    assert (demo_dir / "test.albl").is_file()
    assert (demo_dir / "manifest.json").is_file()
    report = load_report_json(demo_dir / "report.json")
    assert report["schema"] == 1
    assert len(report["results"]) == 3  # one variant, three taps
    for row in report["results"]:
        assert 0.0 <= row["auc"] <= 1.0
        assert row["n_test"] == 500
    assert 0.5 < report["test_accuracy"] <= 1.0
    assert 0.5 < report["train_accuracy"] <= 1.0


def test_demo_is_deterministic(demo_dir, tmp_path):
    again = tmp_path / "again"
    assert main(["demo", "--out", str(again), *DEMO_FLAGS]) == 0
    for name in (
        "train_hidden1.atrc",
        "test_output.atrc",
        "train.albl",
        "test.albl",
        "scores_hidden2_dsa1.csv",
        "roc_output_dsa1.csv",
    ):
        assert (again / name).read_bytes() == (demo_dir / name).read_bytes()


def test_demo_perturbation_oracle_flags_at_least_misclassified(demo_dir, tmp_path):
    out = tmp_path / "pert"
    assert main(
        ["demo", "--out", str(out), *DEMO_FLAGS, "--oracle", "perturbation", "--epsilon", "0.25"]
    ) == 0
    base = load_report_json(demo_dir / "report.json")
    pert = load_report_json(out / "report.json")
    for b_row, p_row in zip(base["results"], pert["results"]):
        assert p_row["n_corner"] >= b_row["n_corner"]


# -------------------------------------------------------- compute and eval


def test_compute_matches_library_scores(demo_dir):
    manifest = load_manifest(demo_dir / "manifest.json")
    cols = read_scores_csv(demo_dir / "scores_hidden1_dsa1.csv")
    train = load_trace_file(demo_dir / "train_hidden1.atrc")
    test = load_trace_file(demo_dir / "test_hidden1.atrc")
    tr_true, tr_pred = load_labels(demo_dir / "train.albl", train.n_samples)
    te_true, te_pred = load_labels(demo_dir / "test.albl", test.n_samples)
    train_set = LabeledTraceSet(train, tr_true, tr_pred, 2)
    test_set = LabeledTraceSet(test, te_true, te_pred, 2)
    scores = batch_dsa(train_set, test_set, manifest.dsa_config("dsa1"))
    assert np.array_equal(cols["dsa"], np.array([s.value for s in scores]))
    assert np.array_equal(cols["anchor_a"], np.array([s.anchor_a for s in scores]))
    assert np.array_equal(cols["true"], te_true)
    assert np.array_equal(cols["predicted"], te_pred)


def test_compute_with_flags(tmp_path, rng):
    rows_train = rng.normal(size=(30, 3))
    labels_train = np.array([0, 1] * 15)
    rows_test = rng.normal(size=(10, 3))
    labels_test = np.array([0, 1] * 5)
    flags = write_pair(tmp_path, rows_train, labels_train, rows_test, labels_test)
    out = tmp_path / "out"
    code = main(["compute", *flags, "--out", str(out), "--variant", "dsa0", "--variant", "dsa2"])
    assert code == 0
    assert (out / "scores_test_layer_dsa0.csv").is_file()
    assert (out / "scores_test_layer_dsa2.csv").is_file()
    assert (out / "manifest.json").is_file()
    assert not (out / "report.json").exists()


def test_compute_via_saved_manifest_and_out_override(tmp_path, rng):
    rows_train = rng.normal(size=(20, 2))
    labels_train = np.array([0, 1] * 10)
    rows_test = rng.normal(size=(6, 2))
    labels_test = np.array([0, 1] * 3)
    flags = write_pair(tmp_path, rows_train, labels_train, rows_test, labels_test)
    first = tmp_path / "first"
    assert main(["compute", *flags, "--out", str(first), "--variant", "dsa1"]) == 0
    second = tmp_path / "second"
    code = main(
        ["compute", "--manifest", str(first / "manifest.json"), "--out", str(second)]
    )
    assert code == 0
    a = (first / "scores_test_layer_dsa1.csv").read_bytes()
    b = (second / "scores_test_layer_dsa1.csv").read_bytes()
    assert a == b


def test_eval_writes_report_and_curves(tmp_path, rng):
    rows_train = rng.normal(size=(40, 3))
    labels_train = np.array([0, 1] * 20)
    rows_test = rng.normal(size=(12, 3))
    labels_test = np.array([0, 1] * 6)
    preds_test = labels_test.copy()
    preds_test[:3] = 1 - preds_test[:3]  # three corner cases
    flags = write_pair(
        tmp_path, rows_train, labels_train, rows_test, labels_test, preds_test
    )
    out = tmp_path / "out"
    code = main(["eval", *flags, "--out", str(out), "--variant", "dsa1", "--svg"])
    assert code == 0
    report = load_report_json(out / "report.json")
    row = report["results"][0]
    assert row["n_corner"] == 3
    assert (out / "roc_test_layer_dsa1.csv").is_file()
    assert (out / "coverage_test_layer_dsa1.csv").is_file()
    assert (out / "accuracy_test_layer_dsa1.csv").is_file()
    for svg in row["svg_files"]:
        text = Path(svg).read_text()
        assert text.startswith("<svg")
        assert "polyline" in text


# ----------------------------------------------------------------- curves


def test_curves_subcommand(demo_dir, tmp_path, capsys):
    out = tmp_path / "curves"
    code = main(
        ["curves", "--scores", str(demo_dir / "scores_output_dsa1.csv"), "--out", str(out)]
    )
    assert code == 0
    stdout = capsys.readouterr().out
    assert "auc=" in stdout
    assert (out / "roc_output_dsa1.csv").is_file()
    assert (out / "coverage_output_dsa1.csv").is_file()
    assert (out / "accuracy_output_dsa1.csv").is_file()
    # identical to what eval wrote for the same scores
    assert (out / "roc_output_dsa1.csv").read_bytes() == (
        demo_dir / "roc_output_dsa1.csv"
    ).read_bytes()


def test_curves_svg_deterministic(demo_dir, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(
            [
                "curves",
                "--scores", str(demo_dir / "scores_output_dsa1.csv"),
                "--out", str(out),
                "--svg",
            ]
        )
        assert code == 0
        outs.append(out)
    for svg in ("roc_output_dsa1.svg", "coverage_output_dsa1.svg", "accuracy_output_dsa1.svg"):
        assert (outs[0] / svg).read_bytes() == (outs[1] / svg).read_bytes()


# ------------------------------------------------------------- exit codes


def test_missing_input_exits_2(tmp_path, capsys):
    code = main(
        [
            "eval",
            "--train-traces", str(tmp_path / "nope.atrc"),
            "--train-labels", str(tmp_path / "nope.albl"),
            "--test-traces", str(tmp_path / "nada.atrc"),
            "--test-labels", str(tmp_path / "nada.albl"),
            "--out", str(tmp_path / "out"),
        ]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("E_IO_MISSING:")


def test_validation_error_exits_3(tmp_path, rng, capsys):
    flags = write_pair(
        tmp_path,
        rng.normal(size=(10, 2)),
        np.array([0, 1] * 5),
        rng.normal(size=(4, 2)),
        np.array([0, 1, 0, 1]),
    )
    code = main(["compute", *flags, "--out", str(tmp_path / "out"), "--k", "0"])
    assert code == 3
    assert capsys.readouterr().err.startswith("E_VALIDATION:")


def test_missing_flags_exit_3(tmp_path, capsys):
    code = main(["compute", "--out", str(tmp_path / "out")])
    assert code == 3
    assert "E_VALIDATION" in capsys.readouterr().err


def test_usage_error_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["compute", "--variant", "dsa9"])
    assert exc.value.code == 3
    assert "E_VALIDATION" in capsys.readouterr().err


def test_no_corner_cases_exits_4(tmp_path, rng, capsys):
    # predictions equal the labels everywhere: nothing to cover
    flags = write_pair(
        tmp_path,
        rng.normal(size=(20, 2)),
        np.array([0, 1] * 10),
        rng.normal(size=(6, 2)),
        np.array([0, 1] * 3),
    )
    code = main(["eval", *flags, "--out", str(tmp_path / "out"), "--variant", "dsa1"])
    assert code == 4
    assert capsys.readouterr().err.startswith("E_NO_CORNER_CASES:")


def test_degenerate_training_labels_exit_4(tmp_path, rng, capsys):
    # single-class training set cannot anchor the denominator
    rows_train = rng.normal(size=(10, 2))
    labels_train = np.zeros(10, dtype=int)
    rows_test = rng.normal(size=(4, 2))
    labels_test = np.zeros(4, dtype=int)
    flags = write_pair(tmp_path, rows_train, labels_train, rows_test, labels_test)
    code = main(
        ["compute", *flags, "--out", str(tmp_path / "out"), "--variant", "dsa1", "--n-classes", "1"]
    )
    assert code == 4
    err = capsys.readouterr().err
    assert err.startswith("E_NO_CORNER_CASES:") or err.startswith("E_DEGENERATE:")


def test_manifest_rejects_unknown_keys_exit_3(tmp_path, capsys):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"bogus": 1}))
    code = main(["compute", "--manifest", str(path)])
    assert code == 3
    assert "E_VALIDATION" in capsys.readouterr().err
