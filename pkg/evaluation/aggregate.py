"""
Turn held-out window predictions into a report: per-participant metrics,
macro mean/std over participants, pooled (micro) metrics per scope, baselines
and curve points.
"""
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from data_model.errors import ValidationError
from data_model.types import Group, Task
from evaluation.metrics import (
    auprc,
    auroc,
    delong_ci,
    multiclass_auprc,
    multiclass_auroc,
    multiclass_baseline,
    prevalence,
    pr_curve,
    roc_curve,
)
from evaluation.regression import regression_eval
from utils.file_operations import jsonable, save_json, write_frame

logger = logging.getLogger(__name__)

SCOPES = ("treatment", "all")
PROBABILITY_COLUMNS = ["prob_1", "prob_2", "prob_3"]


@dataclass
class EvalReport:
    task: str
    scope: str
    per_participant: pd.DataFrame
    excluded: list
    macro: dict
    pooled: dict
    curves: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "task": self.task,
            "scope": self.scope,
            "macro": self.macro,
            "pooled": self.pooled,
            "excluded_participants": self.excluded,
            "per_participant": self.per_participant.to_dict("records"),
            **self.extra,
        }

    def write(self, out_dir, name="report"):
        """Write `<name>.json`, `<name>_participants.csv` and one CSV per curve."""
        save_json(os.path.join(out_dir, f"{name}.json"), jsonable(self.to_dict()))
        write_frame(self.per_participant, os.path.join(out_dir, f"{name}_participants.csv"))
        for curve_name, frame in self.curves.items():
            write_frame(frame, os.path.join(out_dir, f"{name}_{curve_name}.csv"))


def _macro(values):
    values = [v for v in values if np.isfinite(v)]
    if not values:
        return {"mean": np.nan, "std": np.nan, "n": 0}
    return {"mean": float(np.mean(values)), "std": float(np.std(values)), "n": len(values)}


def _pooled_binary(frame, scope_name):
    labels = frame["label"].to_numpy(dtype=int)
    scores = frame["score"].to_numpy(dtype=float)
    n_pos = int(labels.sum())
    result = {
        "n_windows": int(labels.size),
        "n_positive": n_pos,
        "baseline_auprc": prevalence(labels),
        "baseline_auroc": 0.5,
        "auroc": np.nan,
        "auprc": np.nan,
        "auroc_ci": [np.nan, np.nan],
    }
    curves = {}
    if n_pos == 0 or n_pos == labels.size:
        logger.warning("Pooled %s predictions hold a single class; AUROC undefined", scope_name)
        if n_pos:
            result["auprc"] = auprc(scores, labels)
        return result, curves
    result["auroc"] = auroc(scores, labels)
    result["auprc"] = auprc(scores, labels)
    if min(n_pos, labels.size - n_pos) >= 2:
        result["auroc_ci"] = list(delong_ci(scores, labels))
    fpr, tpr, thresholds = roc_curve(scores, labels)
    curves[f"roc_{scope_name}"] = pd.DataFrame({"fpr": fpr, "tpr": tpr, "threshold": thresholds})
    recall, precision, thresholds = pr_curve(scores, labels)
    curves[f"pr_{scope_name}"] = pd.DataFrame({"recall": recall, "precision": precision, "threshold": thresholds})
    return result, curves


def _aggregate_binary(predictions, task, scope):
    treatment = predictions[predictions["group"] == str(Group.TREATMENT)]
    if treatment.empty:
        raise ValidationError("No treatment participants in the evaluation scope")

    rows, excluded = [], []
    for participant, frame in treatment.groupby("participant", sort=True):
        labels = frame["label"].to_numpy(dtype=int)
        scores = frame["score"].to_numpy(dtype=float)
        both = 0 < labels.sum() < labels.size
        rows.append({
            "participant": participant,
            "n_windows": labels.size,
            "prevalence": prevalence(labels),
            "auroc": auroc(scores, labels) if both else np.nan,
            "auprc": auprc(scores, labels) if both else np.nan,
            "included": both,
        })
        if not both:
            excluded.append(participant)
    if excluded:
        logger.warning("Excluded %d single-class participants from macro statistics: %s", len(excluded), ", ".join(excluded))
    per_participant = pd.DataFrame(rows)
    included = per_participant[per_participant["included"]]
    macro = {
        "auroc": _macro(included["auroc"]),
        "auprc": _macro(included["auprc"]),
        "baseline_auprc": float(included["prevalence"].mean()) if not included.empty else np.nan,
    }

    pooled, curves = {}, {}
    scopes = {"treatment": treatment}
    if scope == "all":
        scopes["all"] = predictions
    for name, frame in scopes.items():
        pooled[name], scope_curves = _pooled_binary(frame, name)
        curves.update(scope_curves)
    return EvalReport(str(task), scope, per_participant, excluded, macro, pooled, curves)


def _aggregate_categorical(predictions, task, scope):
    rows, excluded = [], []
    for participant, frame in predictions.groupby("participant", sort=True):
        labels = frame["label"].to_numpy(dtype=int)
        probabilities = frame[PROBABILITY_COLUMNS].to_numpy(dtype=float)
        multi = np.unique(labels).size >= 2
        rows.append({
            "participant": participant,
            "group": frame["group"].iloc[0],
            "n_windows": labels.size,
            "auroc": multiclass_auroc(probabilities, labels) if multi else np.nan,
            "auprc": multiclass_auprc(probabilities, labels) if multi else np.nan,
            "baseline_auprc": multiclass_baseline(labels),
            "included": multi,
        })
        if not multi:
            excluded.append(participant)
    per_participant = pd.DataFrame(rows)
    included = per_participant[per_participant["included"]]
    macro = {
        "auroc": _macro(included["auroc"]),
        "auprc": _macro(included["auprc"]),
        "baseline_auprc": float(included["baseline_auprc"].mean()) if not included.empty else np.nan,
    }
    labels = predictions["label"].to_numpy(dtype=int)
    probabilities = predictions[PROBABILITY_COLUMNS].to_numpy(dtype=float)
    pooled = {
        scope: {
            "n_windows": int(labels.size),
            "auroc": multiclass_auroc(probabilities, labels),
            "auprc": multiclass_auprc(probabilities, labels),
            "baseline_auprc": multiclass_baseline(labels),
            "baseline_auroc": 0.5,
        }
    }
    return EvalReport(str(task), scope, per_participant, excluded, macro, pooled)


def _aggregate_regression(predictions, task, scope):
    if scope == "treatment":
        predictions = predictions[predictions["group"] == str(Group.TREATMENT)]
        if predictions.empty:
            raise ValidationError("No treatment participants in the evaluation scope")
    rows = []
    for participant, frame in predictions.groupby("participant", sort=True):
        residual = frame["prediction"].to_numpy(dtype=float) - frame["reference"].to_numpy(dtype=float)
        rows.append({"participant": participant, "n_windows": residual.size, "mae": float(np.mean(np.abs(residual)))})
    per_participant = pd.DataFrame(rows)
    pooled = {scope: regression_eval(predictions["prediction"].to_numpy(), predictions["reference"].to_numpy())}
    macro = {"mae": _macro(per_participant["mae"])}
    return EvalReport(str(task), scope, per_participant, [], macro, pooled)


def aggregate(predictions, task, scope="all"):
    """
    Build an EvalReport from held-out predictions.

    Parameters:
        predictions (DataFrame): one row per window with participant, group and
            label/score (binary), label/prob_1..3 (categorical) or
            prediction/reference (regression).
        task (Task): the evaluated task.
        scope (str): "treatment" or "all"; pooled metrics are reported for every
            scope up to and including this one.
    """
    if scope not in SCOPES:
        raise ValidationError(f"Unknown scope '{scope}'")
    if predictions is None or len(predictions) == 0:
        raise ValidationError("Cannot aggregate an empty prediction set")
    task = Task(task)
    if task.is_binary:
        return _aggregate_binary(predictions, task, scope)
    if task == Task.PHASE_CATEGORICAL:
        return _aggregate_categorical(predictions, task, scope)
    return _aggregate_regression(predictions, task, scope)
