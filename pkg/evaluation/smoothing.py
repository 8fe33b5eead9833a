"""
Temporal smoothing of window predictions within a driving segment
(participant x phase) and AUROC as a function of elapsed driving time.
"""
import numpy as np
import pandas as pd

from config.config import Config
from data_model.errors import ValidationError
from evaluation.metrics import auroc, delong_ci


def cumulative_moving_average(values):
    values = np.asarray(values, dtype=float)
    return np.cumsum(values) / np.arange(1, values.size + 1)


def cma_smooth(predictions, window_length_s, bin_s=None, level=None):
    """
    Smooth window scores per segment and trace pooled AUROC over elapsed time.

    A window's elapsed time is its end minus the phase start, so the first
    window of a phase sits at one full window length. Windows are grouped into
    bins of `bin_s` seconds starting there; per segment the bin means are
    accumulated into a cumulative moving average and every window takes the
    CMA of its bin.

    Returns:
        (smoothed, curve): `smoothed` is the prediction frame with `elapsed_s`,
        `bin_s` and `smoothed_score` columns; `curve` has one row per bin time t
        with the pooled AUROC (and DeLong CI) of all windows observed up to t.
    """
    bin_s = Config.CMA_BIN_S if bin_s is None else bin_s
    level = Config.DELONG_LEVEL if level is None else level
    if len(predictions) == 0:
        raise ValidationError("Cannot smooth an empty prediction set")
    if bin_s <= 0:
        raise ValidationError("bin_s must be positive")

    frame = predictions.copy()
    frame["elapsed_s"] = frame["start_s"] + window_length_s - frame["phase_start_s"]
    bin_index = np.floor((frame["elapsed_s"] - window_length_s) / bin_s + 1e-9).astype(int)
    frame["bin_s"] = window_length_s + bin_index * bin_s

    smoothed = []
    for _, segment in frame.groupby(["participant", "phase"], sort=False):
        if segment.empty:
            raise ValidationError("Empty driving segment")
        bin_means = segment.groupby("bin_s", sort=True)["score"].mean()
        cma = pd.Series(cumulative_moving_average(bin_means.to_numpy()), index=bin_means.index)
        smoothed.append(segment["bin_s"].map(cma))
    frame["smoothed_score"] = pd.concat(smoothed).reindex(frame.index)

    rows = []
    for t in np.sort(frame["bin_s"].unique()):
        observed = frame[frame["bin_s"] <= t]
        labels = observed["label"].to_numpy(dtype=int)
        scores = observed["smoothed_score"].to_numpy(dtype=float)
        n_pos = int(labels.sum())
        row = {"elapsed_s": float(t), "n_windows": int(labels.size), "auroc": np.nan, "ci_low": np.nan, "ci_high": np.nan}
        if 0 < n_pos < labels.size:
            row["auroc"] = auroc(scores, labels)
            if min(n_pos, labels.size - n_pos) >= 2:
                row["ci_low"], row["ci_high"] = delong_ci(scores, labels, level)
        rows.append(row)
    return frame, pd.DataFrame(rows)
