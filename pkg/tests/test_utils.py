import json
import os

import numpy as np
import pandas as pd
import pytest

from data_model.errors import UpstreamMismatchError, ValidationError
from utils.file_operations import hash_directory, jsonable, prepare_output_dir
from utils.manifest import RunManifest, load_run_manifest, verify_upstream
from utils.results_utils import comparison_table, render_reports, results_table, sweep_grid


def report(model="lr", task="early_warning", length_s=60.0, scope="all", auroc=0.8):
    return {
        "task": task,
        "scope": scope,
        "model": model,
        "window": {"length_s": length_s},
        "macro": {
            "auroc": {"mean": auroc, "std": 0.1, "n": 4},
            "auprc": {"mean": 0.5, "std": 0.05, "n": 4},
            "baseline_auprc": 0.3,
        },
        "pooled": {
            "treatment": {"n_windows": 80, "auroc": auroc - 0.05, "auprc": 0.45, "baseline_auprc": 0.35},
            "all": {"n_windows": 120, "auroc": auroc - 0.02, "auprc": 0.4, "baseline_auprc": 0.25},
        },
    }


def finished_stage(directory, command="synth"):
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "data.csv"), "w", encoding="utf-8") as file:
        file.write("t_s,value\n0,1\n")
    RunManifest(command, seeds={"root": 0}).finish(directory)
    return directory


def test_prepare_output_dir(tmp_path):
    target = str(tmp_path / "out")
    assert prepare_output_dir(target) == target

    (tmp_path / "out" / "old.txt").write_text("x")
    assert prepare_output_dir(target) == f"{target}-1"
    (tmp_path / "out-1" / "old.txt").write_text("x")
    assert prepare_output_dir(target) == f"{target}-2"

    assert prepare_output_dir(target, force=True) == target
    assert os.listdir(target) == []


def test_hash_directory_skips_run_manifest(tmp_path):
    directory = finished_stage(str(tmp_path / "stage"))
    hashes = hash_directory(directory)
    assert list(hashes) == ["data.csv"]
    assert len(hashes["data.csv"]) == 64


def test_jsonable():
    data = jsonable({"flag": np.bool_(True), "n": np.int64(3), "values": np.array([1.5, np.nan]), 1: (np.float32(0.5),)})
    assert data == {"flag": True, "n": 3, "values": [1.5, None], "1": [0.5]}


def test_run_manifest_round_trip(tmp_path):
    directory = finished_stage(str(tmp_path / "stage"))
    manifest = load_run_manifest(directory)
    assert manifest.command == "synth"
    assert manifest.seeds == {"root": 0}
    assert manifest.finished_at
    assert set(manifest.outputs) == {"data.csv"}


def test_verify_upstream(tmp_path):
    directory = finished_stage(str(tmp_path / "stage"), "preprocess")
    assert verify_upstream(directory, "preprocess").command == "preprocess"
    assert verify_upstream(str(tmp_path)) is None

    with pytest.raises(UpstreamMismatchError):
        verify_upstream(directory, "window")

    with open(os.path.join(directory, "data.csv"), "a", encoding="utf-8") as file:
        file.write("1,2\n")
    with pytest.raises(UpstreamMismatchError, match="data.csv"):
        verify_upstream(directory)


def test_manifest_records_upstream_digest(tmp_path):
    upstream = finished_stage(str(tmp_path / "stage"))
    manifest = RunManifest("preprocess")
    entry = manifest.add_input("cohort", upstream)
    assert entry["upstream_command"] == "synth"
    assert entry["upstream_digest"] == load_run_manifest(upstream).output_digest
    with pytest.raises(ValidationError):
        manifest.add_input("missing", str(tmp_path / "nowhere"))


def test_results_table_rows():
    table = results_table([("eval", report())])
    assert table["row"].tolist() == ["macro", "pooled_treatment", "pooled_all"]
    assert table.loc[0, "auroc"] == 0.8
    assert table.loc[2, "n"] == 120


def test_results_table_rejects_conflicting_windows():
    with pytest.raises(ValidationError, match="Conflicting"):
        results_table([("a", report(length_s=60.0)), ("b", report(model="cnn", length_s=180.0))])
    with pytest.raises(ValidationError):
        results_table([])


def test_comparison_table_places_models_side_by_side():
    results = results_table([("a", report("lr", auroc=0.7)), ("b", report("cnn", auroc=0.9))])
    comparison = comparison_table(results)
    macro = comparison[comparison["row"] == "macro"].iloc[0]
    assert macro["auroc_lr"] == pytest.approx(0.7)
    assert macro["auroc_cnn"] == pytest.approx(0.9)


def test_repeated_model_labels_use_source():
    results = results_table([("run_a", report()), ("run_b", report())])
    assert set(results["model"]) == {"lr:run_a", "lr:run_b"}


def test_sweep_grid():
    sweep = pd.DataFrame({
        "task": ["early_warning", "early_warning", "above_limit"],
        "length_s": [60.0, 30.0, 60.0],
        "macro_auroc_mean": [0.8, 0.7, 0.75],
    })
    grid = sweep_grid(sweep)
    assert grid["length_s"].tolist() == [30.0, 60.0]
    assert grid["early_warning_macro_auroc_mean"].tolist() == [0.7, 0.8]
    with pytest.raises(ValidationError):
        sweep_grid(pd.DataFrame({"task": ["early_warning"]}))


def test_render_reports(tmp_path):
    source = tmp_path / "evaluate"
    source.mkdir()
    (source / "report.json").write_text(json.dumps(report()))
    out_dir = tmp_path / "report"
    out_dir.mkdir()

    text = render_reports([str(source)], str(out_dir))
    assert "pooled_all" in text
    assert {"results.csv", "comparison.csv", "results.txt"} <= set(os.listdir(out_dir))
    with pytest.raises(ValidationError):
        render_reports([str(tmp_path / "missing")], str(out_dir))
