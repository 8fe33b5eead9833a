import json
import os

import pandas as pd
import pytest

from evaluation.pipelines import run_lr_experiment
from main import EXIT_FAILURE, EXIT_OK, EXIT_VALIDATION, build_parser, main
from utils.commands import COMMANDS
from utils.manifest import load_run_manifest
from windowing.storage import load_windows


def run(*argv):
    return main([*argv, "--threads", "1"])


@pytest.fixture(scope="module")
def cli_cohort(tmp_path_factory, tiny_config_file):
    out_dir = str(tmp_path_factory.mktemp("cli") / "synth")
    assert run("synth", "--config", tiny_config_file, "--out", out_dir) == EXIT_OK
    return out_dir


def test_usage_errors_exit_with_validation_code(tmp_path):
    assert main(["bogus"]) == EXIT_VALIDATION
    assert main(["window", "--out", str(tmp_path / "w")]) == EXIT_VALIDATION
    assert main([]) == EXIT_VALIDATION


def test_unexpected_errors_exit_with_failure_code(tmp_path, monkeypatch):
    def broken(args):
        raise RuntimeError("disk on fire")

    monkeypatch.setitem(COMMANDS, "synth", broken)
    assert run("synth", "--out", str(tmp_path / "synth")) == EXIT_FAILURE


def test_synth_writes_cohort_and_manifest(cli_cohort):
    assert os.path.isfile(os.path.join(cli_cohort, "manifest.json"))
    manifest = load_run_manifest(cli_cohort)
    assert manifest.command == "synth"
    assert manifest.seeds == {"root": 7}
    assert "manifest.json" in manifest.outputs


def test_existing_output_gets_a_sibling(tmp_path, tiny_config_file):
    out_dir = str(tmp_path / "synth")
    assert run("synth", "--config", tiny_config_file, "--out", out_dir) == EXIT_OK
    assert run("synth", "--config", tiny_config_file, "--out", out_dir, "--seed", "3") == EXIT_OK
    assert load_run_manifest(f"{out_dir}-1").seeds == {"root": 3}
    assert load_run_manifest(out_dir).seeds == {"root": 7}


def test_tampered_input_is_rejected(tmp_path, tiny_config_file):
    cohort = str(tmp_path / "synth")
    assert run("synth", "--config", tiny_config_file, "--out", cohort) == EXIT_OK
    with open(os.path.join(cohort, "bac.csv"), "a", encoding="utf-8") as file:
        file.write("T01,9999,0.0,0.0\n")
    assert run("preprocess", "--input", cohort, "--out", str(tmp_path / "pre")) == EXIT_VALIDATION


def test_wrong_upstream_stage_is_rejected(tmp_path, cli_cohort):
    assert run("window", "--input", cli_cohort, "--out", str(tmp_path / "windows")) == EXIT_VALIDATION


def test_unknown_task_is_a_validation_error(tmp_path):
    out_dir = str(tmp_path / "train")
    assert run("train-lr", "--input", str(tmp_path), "--task", "later", "--out", out_dir) == EXIT_VALIDATION


def test_stage_flags_accept_long_spellings(tmp_path):
    parser = build_parser()
    cohort = str(tmp_path / "synth")
    args = parser.parse_args(["preprocess", "--manifest", f"{cohort}/manifest.json", "--arousal-model", "est.json", "--out", "pre"])
    assert (args.input, args.estimator) == (f"{cohort}/manifest.json", "est.json")
    args = parser.parse_args(["window", "--input", "pre", "--spec", "cnn", "--out", "win"])
    assert args.pipeline == "cnn"
    args = parser.parse_args(["train-lr", "--input", "win", "--lambda", "0.01", "--folds", "loso", "--out", "lr"])
    assert (args.lam, args.folds) == ("0.01", "loso")
    args = parser.parse_args(["evaluate", "--input", "lr", "--model", "lr", "--task", "early", "--out", "eval"])
    assert (args.model, args.task) == ("lr", "early")
    assert main(["train-lr", "--input", "win", "--folds", "kfold", "--out", str(tmp_path / "lr")]) == EXIT_VALIDATION


@pytest.fixture
def training_dir(tmp_path):
    """A train-lr style output directory without a run manifest."""
    train = tmp_path / "lr"
    train.mkdir()
    summary = {"task": "early_warning", "model": "lr", "window": {"length_s": 60.0, "step_s": 15.0}}
    (train / "train_summary.json").write_text(json.dumps(summary), encoding="utf-8")
    rows = [
        (pid, "treatment", 2, 0.0, 15.0 * i, label, score)
        for pid in ("T01", "T02")
        for i, (label, score) in enumerate([(0, 0.1), (0, 0.3), (1, 0.6), (1, 0.9)])
    ]
    columns = ["participant", "group", "phase", "phase_start_s", "start_s", "label", "score"]
    pd.DataFrame(rows, columns=columns).to_csv(train / "predictions.csv", index=False)
    return str(train)


def test_evaluate_checks_model_and_task_against_training_run(tmp_path, training_dir):
    assert run("evaluate", "--input", training_dir, "--model", "cnn", "--out", str(tmp_path / "e1")) == EXIT_VALIDATION
    assert run("evaluate", "--input", training_dir, "--task", "above", "--out", str(tmp_path / "e2")) == EXIT_VALIDATION
    out_dir = str(tmp_path / "e3")
    assert run("evaluate", "--input", training_dir, "--model", "lr", "--task", "early", "--out", out_dir) == EXIT_OK
    with open(os.path.join(out_dir, "report.json"), encoding="utf-8") as file:
        assert json.load(file)["macro"]["auroc"]["mean"] == 1.0


@pytest.mark.slow
def test_feature_pipeline_end_to_end(tmp_path, cli_cohort, small_catalog, small_catalog_file):
    pre, windows, train, evaluate, report = (str(tmp_path / name) for name in ("pre", "win", "lr", "eval", "report"))
    assert run("preprocess", "--manifest", os.path.join(cli_cohort, "manifest.json"), "--out", pre) == EXIT_OK
    assert run("window", "--input", pre, "--spec", "feature", "--length", "60", "--step", "15", "--out", windows) == EXIT_OK
    assert run("train-lr", "--input", windows, "--task", "early", "--catalog", small_catalog_file,
               "--lambda", "auto", "--folds", "loso", "--out", train) == EXIT_OK
    assert run("evaluate", "--input", train, "--model", "lr", "--task", "early", "--out", evaluate) == EXIT_OK
    assert run("report", "--inputs", evaluate, "--out", report) == EXIT_OK

    with open(os.path.join(evaluate, "report.json"), encoding="utf-8") as file:
        written = json.load(file)
    assert written["task"] == "early_warning"
    assert written["window"]["length_s"] == 60.0
    assert os.path.isfile(os.path.join(train, "coefficients.csv"))
    assert os.path.isfile(os.path.join(report, "results.csv"))

    loaded, _, _ = load_windows(windows)
    in_memory = run_lr_experiment(loaded, "early_warning", catalog=small_catalog, seed=0, threads=1)
    assert written["pooled"]["all"]["auroc"] == pytest.approx(in_memory.report.pooled["all"]["auroc"], abs=0.01)
    assert in_memory.report.pooled["all"]["auroc"] > 0.8


@pytest.mark.slow
def test_neural_pipeline_end_to_end(tmp_path, cli_cohort):
    pre, windows, train, evaluate = (str(tmp_path / name) for name in ("pre", "win", "cnn", "eval"))
    assert run("preprocess", "--input", cli_cohort, "--out", pre) == EXIT_OK
    assert run("window", "--input", pre, "--spec", "cnn", "--length", "20", "--step", "20", "--out", windows) == EXIT_OK
    assert run("train-cnn", "--input", windows, "--epochs", "1", "--out", train) == EXIT_OK
    assert run("evaluate", "--input", train, "--model", "cnn", "--out", evaluate) == EXIT_OK

    checkpoints = os.listdir(os.path.join(train, "checkpoints"))
    assert len(checkpoints) == 8
    with open(os.path.join(evaluate, "report.json"), encoding="utf-8") as file:
        assert json.load(file)["model"] == "cnn"
