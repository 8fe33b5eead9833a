import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from config.config import Config
from data_model.errors import ValidationError
from data_model.types import Cohort, Modality
from preprocess.arousal import compute_arousal_features, estimate_arousal
from preprocess.cleaning import accel_magnitude, remove_outliers, zscore_normalize
from utils.file_operations import copy_file, save_json, write_series_csv

logger = logging.getLogger(__name__)


def preprocess_participant(record, estimator, window_s=None, step_s=None):
    """
    Derive the arousal-probability and acceleration-magnitude streams of one participant.

    Order: clean IBI/HR -> participant z-score -> short-window features -> estimator.
    Returns (record with derived series only, {modality: NormStats as dict}).
    """
    series = record.series
    missing = [m for m in (Modality.IBI_MS, Modality.HR_BPM) if m not in series]
    if missing:
        raise ValidationError(f"Participant {record.id} lacks {', '.join(missing)} for arousal estimation")

    ibi = remove_outliers(series[Modality.IBI_MS])
    hr = remove_outliers(series[Modality.HR_BPM])
    ibi, ibi_stats = zscore_normalize(ibi, "participant")
    hr, hr_stats = zscore_normalize(hr, "participant")

    rows = compute_arousal_features(ibi, hr, window_s=window_s, step_s=step_s)
    derived = {Modality.AROUSAL_PROB: estimate_arousal(rows, estimator)}

    axes = (Modality.ACCEL_X_G, Modality.ACCEL_Y_G, Modality.ACCEL_Z_G)
    if all(axis in series for axis in axes):
        derived[Modality.ACCEL_MAG_G] = accel_magnitude(*(series[axis] for axis in axes))
    elif Modality.ACCEL_MAG_G in series:
        derived[Modality.ACCEL_MAG_G] = series[Modality.ACCEL_MAG_G]
    else:
        raise ValidationError(f"Participant {record.id} has no accelerometer data")

    logger.info(
        "Preprocessed %s: %d arousal samples, %d accel samples",
        record.id,
        len(derived[Modality.AROUSAL_PROB]),
        len(derived[Modality.ACCEL_MAG_G]),
    )
    stats = {str(Modality.IBI_MS): ibi_stats.to_dict(), str(Modality.HR_BPM): hr_stats.to_dict()}
    return replace(record, series=derived), stats


def _preprocess_job(args):
    record, estimator = args
    return preprocess_participant(record, estimator)


def preprocess_cohort(cohort, estimator, threads=None):
    """
    Preprocess every participant; participants run in parallel when threads > 1.
    Output order follows the cohort regardless of scheduling.
    """
    threads = threads or Config.THREADS
    jobs = [(record, estimator) for record in cohort]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(_preprocess_job, jobs))
    else:
        results = [_preprocess_job(job) for job in jobs]
    records = tuple(record for record, _ in results)
    stats = {record.id: participant_stats for record, participant_stats in results}
    return Cohort(records, cohort.root), stats


def write_preprocessed(derived, source_manifest, source_root, out_dir, stats):
    """
    Write derived series as `t_s,value` CSVs with a manifest that ingest_cohort can read back.
    """
    participants = []
    entries = {entry["id"]: entry for entry in source_manifest["participants"]}
    for record in derived:
        files = {
            "arousal": f"{record.id}_arousal.csv",
            "accel_mag": f"{record.id}_accel_mag.csv",
        }
        write_series_csv(record.series[Modality.AROUSAL_PROB], os.path.join(out_dir, files["arousal"]))
        write_series_csv(record.series[Modality.ACCEL_MAG_G], os.path.join(out_dir, files["accel_mag"]))
        entry = dict(entries[record.id])
        entry["files"] = files
        participants.append(entry)

    manifest = {"participants": participants}
    if source_manifest.get("bac_file"):
        copy_file(os.path.join(source_root, source_manifest["bac_file"]), os.path.join(out_dir, "bac.csv"))
        manifest["bac_file"] = "bac.csv"
    save_json(os.path.join(out_dir, "manifest.json"), manifest)
    save_json(os.path.join(out_dir, "norm_stats.json"), stats)
    return manifest
