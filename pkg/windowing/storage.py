"""
Columnar CSV materialization of windows:
    <participant>_windows.csv   participant,phase,start_s,modality,g0,g1,...
    labels.csv                  one row per window with coverage and every task label
    window_spec.json            the WindowSpec sidecar
"""
import os

import numpy as np
import pandas as pd

from data_model.errors import ValidationError
from data_model.types import Task, TaskLabel
from utils.file_operations import load_json, save_json, write_frame
from windowing.segments import WindowSegment, WindowSpec

SPEC_FILE = "window_spec.json"
LABELS_FILE = "labels.csv"
KEY_COLUMNS = ["participant", "phase", "start_s"]


def write_windows(windows, out_dir, spec, normalization="standard"):
    """Write the windows of every participant plus labels and the window-spec sidecar."""
    save_json(os.path.join(out_dir, SPEC_FILE), {**spec.to_dict(), "normalization": normalization})
    width = spec.accel_size
    by_participant = {}
    for window in windows:
        by_participant.setdefault(window.participant_id, []).append(window)

    for participant_id, participant_windows in by_participant.items():
        keys, grids = [], []
        for window in participant_windows:
            for modality in ("arousal", "accel"):
                grid = window.grid(modality)
                padded = np.full(width, np.nan)
                padded[: grid.size] = grid
                keys.append((participant_id, window.phase_index, window.start_s, modality))
                grids.append(padded)
        frame = pd.DataFrame(keys, columns=KEY_COLUMNS + ["modality"])
        frame = pd.concat([frame, pd.DataFrame(np.vstack(grids), columns=[f"g{i}" for i in range(width)])], axis=1)
        write_frame(frame, os.path.join(out_dir, f"{participant_id}_windows.csv"))

    write_frame(labels_frame(windows), os.path.join(out_dir, LABELS_FILE))


def labels_frame(windows):
    rows = []
    for window in windows:
        row = {
            "participant": window.participant_id,
            "group": window.group,
            "phase": window.phase_index,
            "phase_start_s": window.phase_start_s,
            "start_s": window.start_s,
            "coverage_arousal": window.coverage.get("arousal", np.nan),
            "coverage_accel": window.coverage.get("accel", np.nan),
        }
        for task in Task:
            row[str(task)] = window.labels[task].value if task in window.labels else np.nan
        rows.append(row)
    return pd.DataFrame(rows)


def load_windows(window_dir):
    """Restore the WindowSegments written by write_windows, in canonical order."""
    sidecar = load_json(os.path.join(window_dir, SPEC_FILE))
    if sidecar is None:
        raise ValidationError(f"No {SPEC_FILE} in {window_dir}")
    normalization = sidecar.pop("normalization", "standard")
    spec = WindowSpec(**sidecar)
    labels = pd.read_csv(os.path.join(window_dir, LABELS_FILE), dtype={"participant": str})

    windows = []
    for participant_id, rows in labels.groupby("participant", sort=False):
        frame = pd.read_csv(os.path.join(window_dir, f"{participant_id}_windows.csv"), dtype={"participant": str})
        grid_columns = [c for c in frame.columns if c.startswith("g")]
        grids = {}
        for record in frame.itertuples(index=False):
            key = (int(record.phase), round(float(record.start_s), 6), record.modality)
            grids[key] = np.asarray(record[4:], dtype=float)
        for row in rows.itertuples(index=False):
            start = round(float(row.start_s), 6)
            window = WindowSegment(
                participant_id=str(participant_id),
                phase_index=int(row.phase),
                start_s=float(row.start_s),
                spec=spec,
                arousal_grid=grids[(int(row.phase), start, "arousal")][: spec.arousal_size],
                accel_grid=grids[(int(row.phase), start, "accel")][: spec.accel_size],
                coverage={"arousal": float(row.coverage_arousal), "accel": float(row.coverage_accel)},
                group=str(row.group),
                phase_start_s=float(row.phase_start_s),
            )
            window.labels = {
                task: TaskLabel(task, _label_value(task, getattr(row, str(task))))
                for task in Task
                if not pd.isna(getattr(row, str(task)))
            }
            windows.append(window)
        if len(grid_columns) < spec.accel_size:
            raise ValidationError(f"Window file of {participant_id} has {len(grid_columns)} grid columns, expected {spec.accel_size}")
    return windows, spec, normalization


def _label_value(task, value):
    if task is Task.BAC_REGRESSION:
        return float(value)
    return int(value)
