"""
Cohort ingestion from a JSON manifest plus per-participant CSV files.

manifest.json:
    {"participants": [{"id", "group", "phases": [{"index", "start_s", "end_s", "scenarios"?}],
                       "files": {"ibi"?, "hr"?, "accel"?, "arousal"?, "accel_mag"?}}],
     "bac_file": "bac.csv"}

Paths are resolved relative to the cohort root. Every listed file must exist.
"""
import json
import logging
import os

import numpy as np
import pandas as pd

from data_model.errors import IngestionError, ValidationError
from data_model.types import (
    BacMeasurement,
    Cohort,
    DrivingPhase,
    Modality,
    Participant,
    ParticipantRecord,
    SampleSeries,
)

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"

SCALAR_FILES = {
    "ibi": Modality.IBI_MS,
    "hr": Modality.HR_BPM,
    "arousal": Modality.AROUSAL_PROB,
    "accel_mag": Modality.ACCEL_MAG_G,
}
SCALAR_HEADER = ["t_s", "value"]
ACCEL_HEADER = ["t_s", "x_g", "y_g", "z_g"]
BAC_HEADER = ["participant_id", "t_s", "bac_g_per_dl"]


def load_manifest(root_path, manifest=None):
    """
    Return the manifest dict. `manifest` may be a dict, a path, or None (root/manifest.json).
    """
    if isinstance(manifest, dict):
        return manifest
    path = manifest or os.path.join(root_path, MANIFEST_FILE)
    if not os.path.isfile(path):
        raise IngestionError("missing manifest file", path=path)
    with open(path, "r", encoding="utf-8") as file:
        try:
            return json.load(file)
        except json.JSONDecodeError as e:
            raise IngestionError(f"manifest is not valid JSON ({e})", path=path)


def _read_csv(path, header):
    if not os.path.isfile(path):
        raise IngestionError("missing signal file", path=path)
    frame = pd.read_csv(path, encoding="utf-8", dtype=str)
    missing = [column for column in header if column not in frame.columns]
    if missing:
        raise IngestionError(f"expected header {','.join(header)}; missing {','.join(missing)}", path=path)
    return frame


def _numeric_column(frame, column, path):
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        # +2: one for the header line, one for 1-based numbering
        raise IngestionError(f"non-numeric value in column '{column}'", path=path, row=int(np.argmax(bad)) + 2)
    return values


def _check_timestamps(timestamps, path):
    if timestamps.size > 1:
        decreasing = np.diff(timestamps) <= 0
        if decreasing.any():
            raise IngestionError("non-monotonic timestamps", path=path, row=int(np.argmax(decreasing)) + 3)


def read_scalar_series(path, modality):
    """Read a `t_s,value` CSV into a SampleSeries with row-level diagnostics."""
    frame = _read_csv(path, SCALAR_HEADER)
    timestamps = _numeric_column(frame, "t_s", path)
    values = _numeric_column(frame, "value", path)
    _check_timestamps(timestamps, path)

    if modality in (Modality.IBI_MS, Modality.HR_BPM):
        bad = values <= 0
        if bad.any():
            raise IngestionError(f"{modality} must be positive", path=path, row=int(np.argmax(bad)) + 2)
    if modality is Modality.AROUSAL_PROB:
        bad = (values < 0) | (values > 1)
        if bad.any():
            raise IngestionError("arousal probability outside [0, 1]", path=path, row=int(np.argmax(bad)) + 2)
    return SampleSeries(modality, timestamps, values)


def read_accel_series(path):
    """Read a `t_s,x_g,y_g,z_g` CSV into three axis series."""
    frame = _read_csv(path, ACCEL_HEADER)
    timestamps = _numeric_column(frame, "t_s", path)
    _check_timestamps(timestamps, path)
    return {
        Modality.ACCEL_X_G: SampleSeries(Modality.ACCEL_X_G, timestamps, _numeric_column(frame, "x_g", path)),
        Modality.ACCEL_Y_G: SampleSeries(Modality.ACCEL_Y_G, timestamps, _numeric_column(frame, "y_g", path)),
        Modality.ACCEL_Z_G: SampleSeries(Modality.ACCEL_Z_G, timestamps, _numeric_column(frame, "z_g", path)),
    }


def read_bac_file(path):
    """
    Read `participant_id,t_s,bac_g_per_dl[,brac_mg_per_l]`. Returns {participant_id: [BacMeasurement]}.
    """
    frame = _read_csv(path, BAC_HEADER)
    timestamps = _numeric_column(frame, "t_s", path)
    bac = _numeric_column(frame, "bac_g_per_dl", path)
    brac = None
    if "brac_mg_per_l" in frame.columns:
        brac = pd.to_numeric(frame["brac_mg_per_l"], errors="coerce").to_numpy(dtype=float)

    measurements = {}
    for i, participant_id in enumerate(frame["participant_id"].astype(str)):
        try:
            measurement = BacMeasurement(
                participant_id=participant_id,
                timestamp=float(timestamps[i]),
                bac_g_per_dl=float(bac[i]),
                brac_mg_per_l=None if brac is None or np.isnan(brac[i]) else float(brac[i]),
            )
        except ValidationError as e:
            raise IngestionError(str(e), path=path, row=i + 2)
        measurements.setdefault(participant_id, []).append(measurement)
    return measurements


def _parse_phases(entry):
    phases = []
    for phase in entry.get("phases", []):
        phases.append(
            DrivingPhase(
                participant_id=entry["id"],
                phase_index=int(phase["index"]),
                start_s=float(phase["start_s"]),
                end_s=float(phase["end_s"]),
                scenario_sequence=tuple(phase.get("scenarios", ())),
            )
        )
    if not phases:
        raise ValidationError(f"Participant {entry['id']} lists no driving phases")
    return phases


def ingest_cohort(root_path, manifest=None):
    """
    Load every participant listed in the manifest with all signal series and BAC measurements.
    Raises IngestionError naming the file (and row) of the first failing check.
    """
    manifest = load_manifest(root_path, manifest)
    entries = manifest.get("participants")
    if not entries:
        raise ValidationError("Manifest lists no participants")

    bac_by_participant = {}
    if manifest.get("bac_file"):
        bac_by_participant = read_bac_file(os.path.join(root_path, manifest["bac_file"]))

    records = []
    for entry in entries:
        if "id" not in entry or "group" not in entry:
            raise ValidationError(f"Manifest participant entry needs 'id' and 'group': {entry}")
        participant = Participant(str(entry["id"]), entry["group"])
        files = entry.get("files", {})
        unknown = set(files) - set(SCALAR_FILES) - {"accel"}
        if unknown:
            raise ValidationError(f"Unknown file keys for {participant.id}: {', '.join(sorted(unknown))}")

        series = {}
        for key, modality in SCALAR_FILES.items():
            if key in files:
                series[modality] = read_scalar_series(os.path.join(root_path, files[key]), modality)
        if "accel" in files:
            series.update(read_accel_series(os.path.join(root_path, files["accel"])))

        records.append(
            ParticipantRecord(
                participant=participant,
                phases=tuple(_parse_phases(entry)),
                series=series,
                bac=tuple(bac_by_participant.get(participant.id, ())),
            )
        )

    orphans = set(bac_by_participant) - {record.id for record in records}
    if orphans:
        logger.warning("BAC file lists participants absent from the manifest: %s", ", ".join(sorted(orphans)))

    cohort = Cohort(tuple(records), root=str(root_path))
    logger.info("Ingested %d participants from %s", len(cohort), root_path)
    return cohort
