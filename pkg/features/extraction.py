"""
Apply the feature catalog to every window, independently per modality.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config.config import Config
from data_model.errors import ValidationError
from utils.file_operations import load_json, save_json, write_frame

logger = logging.getLogger(__name__)

MODALITY_RATES = {"arousal": Config.AROUSAL_RATE_HZ, "accel": Config.ACCEL_RATE_HZ}
FEATURES_FILE = "features.csv"
COLUMNS_FILE = "feature_columns.json"
KEY_COLUMNS = ["participant", "phase", "start_s"]


@dataclass(frozen=True)
class FeatureVector:
    window_key: tuple
    modality: str
    values: dict
    families: dict = field(default_factory=dict)

    @property
    def names(self):
        return list(self.values)

    @property
    def missing(self):
        return [name for name, value in self.values.items() if not np.isfinite(value)]

    def columns(self):
        """Values keyed by design-matrix column name `<modality>__<feature>`."""
        return {column_name(self.modality, name): value for name, value in self.values.items()}


def column_name(modality, feature):
    return f"{modality}__{feature}"


def split_column(column):
    modality, _, feature = column.partition("__")
    return modality, feature


def extract_features(window, catalog, modalities=("arousal", "accel")):
    """
    Compute every catalog feature on each modality grid of a window.

    Returns {modality: FeatureVector}. Non-finite results are stored as NaN.
    """
    for modality in modalities:
        if window.coverage.get(modality, 0.0) < window.spec.min_coverage - 1e-12:
            raise ValidationError(f"Window {window.key} did not pass the coverage gate for {modality}")

    vectors = {}
    for modality in modalities:
        x = np.asarray(window.grid(modality), dtype=float)
        rate_hz = MODALITY_RATES[modality]
        values, families = {}, {}
        for entry in catalog.entries:
            with np.errstate(all="ignore"):
                result = entry.run(x, rate_hz)
            for name, value in result.items():
                value = float(value)
                values[name] = value if np.isfinite(value) else np.nan
                families[name] = entry.family
        vectors[modality] = FeatureVector(window.key, modality, values, families)
    return vectors


def _extract_job(args):
    window, catalog, modalities = args
    return extract_features(window, catalog, modalities)


def extract_all(windows, catalog, threads=None, modalities=("arousal", "accel")):
    """
    Extract features for many windows. Runs on a process pool when threads > 1;
    results keep the input order.
    """
    threads = threads or Config.THREADS
    jobs = [(window, catalog, modalities) for window in windows]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            vectors = list(executor.map(_extract_job, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        vectors = [_extract_job(job) for job in jobs]
    logger.info("Extracted %d feature vectors per modality", len(vectors))
    return vectors


# Persistence
def feature_frame(vectors):
    """One row per window: key columns followed by `<modality>__<feature>` columns."""
    rows = []
    for by_modality in vectors:
        first = next(iter(by_modality.values()))
        participant, phase, start_s = first.window_key
        row = {"participant": participant, "phase": phase, "start_s": start_s}
        for vector in by_modality.values():
            row.update(vector.columns())
        rows.append(row)
    return pd.DataFrame(rows)


def column_families(vectors):
    families = {}
    for vector in vectors[0].values():
        for name, family in vector.families.items():
            families[column_name(vector.modality, name)] = family
    return families


def write_features(vectors, out_dir, catalog):
    if not vectors:
        raise ValidationError("No feature vectors to write")
    write_frame(feature_frame(vectors), os.path.join(out_dir, FEATURES_FILE), float_format="%.10g")
    save_json(
        os.path.join(out_dir, COLUMNS_FILE),
        {"catalog_version": catalog.version, "catalog_digest": catalog.digest, "families": column_families(vectors)},
    )


def load_features(directory):
    """Read features written by write_features back into per-window {modality: FeatureVector} dicts."""
    path = os.path.join(directory, FEATURES_FILE)
    meta = load_json(os.path.join(directory, COLUMNS_FILE))
    if not os.path.exists(path) or meta is None:
        raise ValidationError(f"'{directory}' does not contain extracted features")
    frame = pd.read_csv(path, dtype={"participant": str})
    families = meta["families"]
    by_modality = {}
    for column in frame.columns:
        if column in KEY_COLUMNS:
            continue
        modality, feature = split_column(column)
        by_modality.setdefault(modality, []).append((column, feature))

    vectors = []
    for row in frame.to_dict("records"):
        key = (row["participant"], int(row["phase"]), round(float(row["start_s"]), 6))
        vectors.append({
            modality: FeatureVector(
                key,
                modality,
                {feature: float(row[column]) for column, feature in columns},
                {feature: families.get(column, "other") for column, feature in columns},
            )
            for modality, columns in by_modality.items()
        })
    return vectors
