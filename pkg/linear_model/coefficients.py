import numpy as np
import pandas as pd

from features.extraction import split_column

REPORT_COLUMNS = ["task", "modality", "family", "mean_abs_coef", "std_abs_coef", "n_columns", "n_folds", "status"]
OVERALL_FAMILY = "all"


def _summary_row(task, modality, family, folds, status):
    return {
        "task": task,
        "modality": modality,
        "family": family,
        "mean_abs_coef": float(np.mean([f[0] for f in folds])),
        "std_abs_coef": float(np.mean([f[1] for f in folds])),
        "n_columns": max(f[2] for f in folds),
        "n_folds": len(folds),
        "status": status,
    }


def coefficient_family_report(models, catalog=None, modalities=("arousal", "accel")):
    """
    Mean absolute LASSO coefficient per (task, modality, feature family).

    For every fold the mean and standard deviation (ddof 0) of |w| over the
    family's columns are computed; the report averages both across folds.
    Each (task, modality) block ends with an "all" row computed the same way
    over every column of the modality. Catalog families without any surviving
    column are listed with status "excluded" and missing statistics.

    Parameters:
        models (list of LassoLogitModel): fitted per-fold models carrying columns, families and task.
        catalog (FeatureCatalog, optional): supplies the full family list.

    Returns:
        pandas.DataFrame with REPORT_COLUMNS, sorted by task, modality and family.
    """
    per_fold, overall = {}, {}
    for model in models:
        groups, totals = {}, {}
        for column, weight in zip(model.columns, np.abs(model.weights)):
            modality, _ = split_column(column)
            family = model.families.get(column, "other")
            groups.setdefault((model.task, modality, family), []).append(weight)
            totals.setdefault((model.task, modality), []).append(weight)
        for key, weights in groups.items():
            per_fold.setdefault(key, []).append((float(np.mean(weights)), float(np.std(weights)), len(weights)))
        for key, weights in totals.items():
            overall.setdefault(key, []).append((float(np.mean(weights)), float(np.std(weights)), len(weights)))

    rows = [_summary_row(*key, folds, "ok") for key, folds in per_fold.items()]

    if catalog is not None:
        tasks = sorted({model.task for model in models})
        present = set(per_fold)
        for task in tasks:
            for modality in modalities:
                if not any(key[0] == task and key[1] == modality for key in present):
                    continue
                for family in catalog.families:
                    if (task, modality, family) not in present:
                        rows.append({
                            "task": task,
                            "modality": modality,
                            "family": family,
                            "mean_abs_coef": np.nan,
                            "std_abs_coef": np.nan,
                            "n_columns": 0,
                            "n_folds": 0,
                            "status": "excluded",
                        })

    frame = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    frame = frame.sort_values(["task", "modality", "family"], kind="stable")
    totals = pd.DataFrame(
        [_summary_row(task, modality, OVERALL_FAMILY, folds, "overall") for (task, modality), folds in overall.items()],
        columns=REPORT_COLUMNS,
    )
    blocks = []
    for key, block in frame.groupby(["task", "modality"], sort=True):
        blocks += [block, totals[(totals["task"] == key[0]) & (totals["modality"] == key[1])]]
    return pd.concat(blocks, ignore_index=True) if blocks else frame.reset_index(drop=True)
