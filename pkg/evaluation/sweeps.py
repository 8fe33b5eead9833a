import logging

import numpy as np
import pandas as pd

from config.config import Config
from data_model.errors import ValidationError
from evaluation.pipelines import run_lr_experiment
from features.extraction import extract_all
from windowing.segments import WindowSpec, quarter_step, segment_cohort

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "task",
    "length_s",
    "step_s",
    "n_windows",
    "macro_auroc_mean",
    "macro_auroc_std",
    "macro_auprc_mean",
    "macro_auprc_std",
    "macro_baseline_auprc",
    "pooled_treatment_auroc",
    "pooled_treatment_auprc",
    "pooled_treatment_baseline_auprc",
    "pooled_all_auroc",
    "pooled_all_auprc",
    "pooled_all_baseline_auprc",
]


def summary_row(report, **identity):
    """Flatten an EvalReport of a binary task into one sweep-table row."""
    row = dict(identity)
    row.update({
        "macro_auroc_mean": report.macro["auroc"]["mean"],
        "macro_auroc_std": report.macro["auroc"]["std"],
        "macro_auprc_mean": report.macro["auprc"]["mean"],
        "macro_auprc_std": report.macro["auprc"]["std"],
        "macro_baseline_auprc": report.macro["baseline_auprc"],
    })
    for scope in ("treatment", "all"):
        pooled = report.pooled.get(scope, {})
        row[f"pooled_{scope}_auroc"] = pooled.get("auroc", np.nan)
        row[f"pooled_{scope}_auprc"] = pooled.get("auprc", np.nan)
        row[f"pooled_{scope}_baseline_auprc"] = pooled.get("baseline_auprc", np.nan)
    return row


def window_sweep(cohort, catalog, tasks=("early_warning", "above_limit"), lengths=None, seed=None, threads=None,
                 normalization="standard", modalities=("arousal", "accel")):
    """
    Run the full feature pipeline for every window length with step = length / 4.

    Returns a DataFrame with one row per (task, length) in SWEEP_COLUMNS order.
    """
    lengths = tuple(Config.SWEEP_LENGTHS_S if lengths is None else lengths)
    if not lengths:
        raise ValidationError("Window sweep needs at least one length")
    rows = []
    for length in lengths:
        spec = WindowSpec.feature(length_s=length, step_s=quarter_step(length))
        windows = segment_cohort(cohort, spec, normalization)
        if not windows:
            logger.warning("No windows of %g s survive segmentation; skipping", length)
            continue
        vectors = extract_all(windows, catalog, threads=threads, modalities=("arousal", "accel"))
        for task in tasks:
            result = run_lr_experiment(
                windows, task, catalog=catalog, vectors=vectors, seed=seed, modalities=modalities, threads=threads
            )
            rows.append(summary_row(result.report, task=str(task), length_s=float(length), step_s=spec.step_s, n_windows=len(windows)))
        logger.info("Window sweep: finished %g s windows", length)
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
