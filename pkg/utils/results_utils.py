"""
Consolidated result tables from evaluation reports and sweep tables:
    results.csv       long table, one row per (model, task, group, row kind)
    comparison.csv    side-by-side AUROC/AUPRC per model
    sweep_grid.csv    window-length grid (when sweep tables are given)
    results.txt       the same tables as human-readable text
"""
import glob
import logging
import os

import numpy as np
import pandas as pd

from data_model.errors import ValidationError
from utils.file_operations import load_json, write_frame

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
SWEEP_FILES = ("sweep.csv", "effect_sweep.csv")
RESULT_COLUMNS = [
    "model",
    "task",
    "group",
    "window_s",
    "row",
    "n",
    "auroc",
    "auroc_std",
    "auprc",
    "auprc_std",
    "baseline_auprc",
    "mae",
    "pearson_r",
    "auroc_above_limit",
]
GRID_METRICS = ["macro_auroc_mean", "macro_auroc_std", "macro_auprc_mean", "macro_baseline_auprc", "pooled_all_auroc"]


def _value(value):
    return np.nan if value is None else float(value)


def collect_inputs(paths):
    """
    Find report JSONs and sweep CSVs among files and stage directories.
    Returns ([(source, report dict)], [(source, sweep frame)]).
    """
    reports, sweeps = [], []
    for path in paths:
        if os.path.isdir(path):
            candidates = sorted(glob.glob(os.path.join(path, REPORT_FILE)))
            candidates += [os.path.join(path, name) for name in SWEEP_FILES if os.path.isfile(os.path.join(path, name))]
            if not candidates:
                raise ValidationError(f"'{path}' contains no {REPORT_FILE} or sweep table")
        elif os.path.isfile(path):
            candidates = [path]
        else:
            raise ValidationError(f"Report input '{path}' does not exist")

        for candidate in candidates:
            source = os.path.basename(os.path.dirname(os.path.abspath(candidate)))
            if candidate.endswith(".csv"):
                sweeps.append((source, pd.read_csv(candidate)))
                continue
            report = load_json(candidate)
            if not isinstance(report, dict) or "task" not in report:
                raise ValidationError(f"'{candidate}' is not an evaluation report")
            reports.append((source, report))
    return reports, sweeps


def report_rows(report, label):
    """Long-format rows of one report: macro plus one row per pooled scope."""
    task = report["task"]
    group = report.get("group", "")
    window_s = _value(report.get("window", {}).get("length_s"))
    base = {"model": label, "task": task, "group": group, "window_s": window_s}
    macro = report.get("macro", {})
    rows = []
    if "mae" in macro:
        rows.append({**base, "row": "macro", "n": macro["mae"].get("n"), "mae": _value(macro["mae"].get("mean"))})
        for scope, pooled in report.get("pooled", {}).items():
            rows.append({
                **base,
                "row": f"pooled_{scope}",
                "n": pooled.get("n_windows"),
                "mae": _value(pooled.get("mae")),
                "pearson_r": _value(pooled.get("pearson_r")),
                "auroc_above_limit": _value(pooled.get("auroc_above_limit")),
            })
        return rows

    rows.append({
        **base,
        "row": "macro",
        "n": macro.get("auroc", {}).get("n"),
        "auroc": _value(macro.get("auroc", {}).get("mean")),
        "auroc_std": _value(macro.get("auroc", {}).get("std")),
        "auprc": _value(macro.get("auprc", {}).get("mean")),
        "auprc_std": _value(macro.get("auprc", {}).get("std")),
        "baseline_auprc": _value(macro.get("baseline_auprc")),
    })
    for scope, pooled in report.get("pooled", {}).items():
        rows.append({
            **base,
            "row": f"pooled_{scope}",
            "n": pooled.get("n_windows"),
            "auroc": _value(pooled.get("auroc")),
            "auprc": _value(pooled.get("auprc")),
            "baseline_auprc": _value(pooled.get("baseline_auprc")),
        })
    return rows


def _labels(reports):
    """Model label per report; the source directory disambiguates repeated labels."""
    keys = [(r.get("model", "model"), r["task"], r.get("group", "")) for _, r in reports]
    labels = []
    for (source, report), key in zip(reports, keys):
        label = key[0]
        if keys.count(key) > 1:
            label = f"{label}:{source}"
        labels.append(label)
    if len(set(zip(labels, (k[1:] for k in keys)))) != len(labels):
        raise ValidationError("Several reports share the same model, task, group and source directory")
    return labels


def _check_task_metadata(reports):
    seen = {}
    for source, report in reports:
        key = (report["task"], report.get("group", ""))
        metadata = (report.get("scope"), report.get("window", {}).get("length_s"))
        if key in seen and seen[key][1] != metadata:
            raise ValidationError(
                f"Conflicting metadata for task '{key[0]}': {seen[key][0]} has scope/window {seen[key][1]}, "
                f"{source} has {metadata}"
            )
        seen.setdefault(key, (source, metadata))


def results_table(reports):
    if not reports:
        raise ValidationError("At least one report is required")
    _check_task_metadata(reports)
    rows = []
    for (_, report), label in zip(reports, _labels(reports)):
        rows.extend(report_rows(report, label))
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def comparison_table(results):
    """AUROC/AUPRC (or MAE) of every model side by side, one row per task, group and row kind."""
    values = [c for c in ("auroc", "auprc", "mae") if results[c].notna().any()]
    wide = results.pivot_table(index=["task", "group", "row"], columns="model", values=values, aggfunc="first", dropna=False)
    wide.columns = [f"{metric}_{model}" for metric, model in wide.columns]
    baselines = results.groupby(["task", "group", "row"])["baseline_auprc"].first()
    return wide.join(baselines).reset_index()


def sweep_grid(sweep):
    """Window length x (task, metric) grid of a window-sweep table."""
    if "length_s" not in sweep.columns or "task" not in sweep.columns:
        raise ValidationError("Sweep table needs 'length_s' and 'task' columns")
    metrics = [m for m in GRID_METRICS if m in sweep.columns]
    grid = sweep.pivot_table(index="length_s", columns="task", values=metrics, aggfunc="first")
    grid.columns = [f"{task}_{metric}" for metric, task in grid.columns]
    return grid.reset_index().sort_values("length_s")


def format_table(title, frame):
    """Render a table as text under a title line."""
    body = frame.to_string(index=False, float_format=lambda v: f"{v:.3f}", na_rep="-")
    return f"📊 {title}\n{body}\n"


def render_reports(paths, out_dir):
    """
    Write the consolidated tables for the given report/sweep inputs.
    Returns the human-readable text.
    """
    reports, sweeps = collect_inputs(paths)
    if not reports and not sweeps:
        raise ValidationError("No reports or sweep tables found")
    sections = []
    if reports:
        results = results_table(reports)
        comparison = comparison_table(results)
        write_frame(results, os.path.join(out_dir, "results.csv"))
        write_frame(comparison, os.path.join(out_dir, "comparison.csv"))
        sections.append(format_table("Results (macro = per participant, pooled = all windows)", results))
        if results["model"].nunique() > 1:
            sections.append(format_table("Model comparison", comparison))
    for source, sweep in sweeps:
        if "effect_scale" in sweep.columns:
            write_frame(sweep, os.path.join(out_dir, f"effect_sweep_{source}.csv"))
            sections.append(format_table(f"Effect sweep ({source})", sweep))
            continue
        grid = sweep_grid(sweep)
        write_frame(grid, os.path.join(out_dir, f"sweep_grid_{source}.csv"))
        sections.append(format_table(f"Window-length sweep ({source})", grid))

    text = "\n".join(sections)
    with open(os.path.join(out_dir, "results.txt"), "w", encoding="utf-8") as file:
        file.write(text)
    logger.info("Rendered %d reports and %d sweep tables to %s", len(reports), len(sweeps), out_dir)
    return text
