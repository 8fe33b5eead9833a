"""
Design-matrix assembly: column filtering, imputation and standardization with
statistics fitted on the training fold and replayed on the test fold.
"""
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config.config import Config
from data_model.errors import ValidationError
from features.extraction import FeatureVector, split_column
from utils.file_operations import hash_payload, save_json, write_frame

logger = logging.getLogger(__name__)

IMPUTE_MODES = ("median", "drop")


def _as_rows(features, modalities=None):
    rows, keys, families = [], [], {}
    for item in features:
        by_modality = {item.modality: item} if isinstance(item, FeatureVector) else item
        row = {}
        for modality, vector in by_modality.items():
            if modalities is not None and modality not in modalities:
                continue
            row.update(vector.columns())
            for name, family in vector.families.items():
                families[f"{modality}__{name}"] = family
        rows.append(row)
        keys.append(next(iter(by_modality.values())).window_key)
    return rows, keys, families


@dataclass
class DesignMatrix:
    """
    Standardized feature matrix of the training windows plus everything needed
    to transform further windows identically.
    """
    X: np.ndarray
    keys: list
    columns: list
    families: dict
    medians: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    impute: str = "median"
    dropped: dict = field(default_factory=dict)

    @property
    def modalities(self):
        return {column: split_column(column)[0] for column in self.columns}

    @property
    def column_hash(self):
        return hash_payload(self.columns)

    def transform(self, features):
        """
        Apply the training statistics to other windows.

        Returns (X, keys). With impute="drop", windows with a missing cell in a
        kept column are left out.
        """
        rows, keys, _ = _as_rows(features)
        if not rows:
            return np.empty((0, len(self.columns))), []
        frame = pd.DataFrame(rows)
        absent = [c for c in self.columns if c not in frame.columns]
        if absent:
            raise ValidationError(f"Feature columns missing from windows: {', '.join(absent[:5])}")
        values = frame[self.columns].to_numpy(dtype=float)
        values, keys = self._fill(values, keys)
        return (values - self.means) / self.stds, keys

    def _fill(self, values, keys):
        missing = ~np.isfinite(values)
        if self.impute == "median":
            values = np.where(missing, self.medians, values)
            return values, keys
        keep = ~missing.any(axis=1)
        return values[keep], [key for key, kept in zip(keys, keep) if kept]

    def metadata(self):
        return {
            "columns": self.columns,
            "families": {c: self.families.get(c, "other") for c in self.columns},
            "impute": self.impute,
            "medians": self.medians.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "dropped": self.dropped,
            "column_hash": self.column_hash,
        }

    def save(self, out_dir, prefix=""):
        frame = pd.DataFrame(self.X, columns=self.columns)
        frame.insert(0, "participant", [key[0] for key in self.keys])
        frame.insert(1, "phase", [key[1] for key in self.keys])
        frame.insert(2, "start_s", [key[2] for key in self.keys])
        write_frame(frame, os.path.join(out_dir, f"{prefix}design_matrix.csv"), float_format="%.10g")
        save_json(os.path.join(out_dir, f"{prefix}design_meta.json"), self.metadata())


def assemble_design_matrix(features, impute="median", modalities=None, missing_threshold=None):
    """
    Stack training feature vectors into a standardized matrix.

    Columns missing in more than `missing_threshold` of the windows are dropped
    and reported; remaining gaps are median-imputed (or their windows dropped),
    then every column is centered and scaled with the training mean and std.

    Parameters:
        features (list): FeatureVector objects or {modality: FeatureVector} dicts, one per window.
        impute (str): "median" or "drop".
        modalities (iterable, optional): restrict columns to these modalities.
    """
    if impute not in IMPUTE_MODES:
        raise ValidationError(f"Unknown imputation mode '{impute}'")
    if not features:
        raise ValidationError("Cannot assemble a design matrix from an empty feature list")
    threshold = Config.MISSING_COLUMN_THRESHOLD if missing_threshold is None else missing_threshold

    rows, keys, families = _as_rows(features, modalities)
    names = set(rows[0])
    if not names:
        raise ValidationError("Selected modalities contribute no feature columns")
    if any(set(row) != names for row in rows):
        raise ValidationError("Feature name sets differ between windows")

    all_columns = list(rows[0])
    values = pd.DataFrame(rows, columns=all_columns).to_numpy(dtype=float)
    missing_fraction = (~np.isfinite(values)).mean(axis=0)
    keep = missing_fraction <= threshold
    dropped = {c: float(f) for c, f, k in zip(all_columns, missing_fraction, keep) if not k}
    if dropped:
        dropped_families = sorted({families.get(c, "other") for c in dropped})
        logger.warning(
            "Dropped %d feature columns with more than %.0f%% missing values (families: %s)",
            len(dropped), 100 * threshold, ", ".join(dropped_families),
        )
    if not keep.any():
        raise ValidationError("Every feature column exceeds the missing-value threshold")

    columns = [c for c, k in zip(all_columns, keep) if k]
    values = values[:, keep]
    finite = np.where(np.isfinite(values), values, np.nan)
    with np.errstate(all="ignore"):
        medians = np.nanmedian(finite, axis=0)
    medians = np.where(np.isfinite(medians), medians, 0.0)

    matrix = DesignMatrix(
        X=np.empty(0),
        keys=keys,
        columns=columns,
        families={c: families.get(c, "other") for c in columns},
        medians=medians,
        means=np.zeros(len(columns)),
        stds=np.ones(len(columns)),
        impute=impute,
        dropped=dropped,
    )
    filled, matrix.keys = matrix._fill(values, keys)
    if filled.shape[0] == 0:
        raise ValidationError("No complete windows remain after dropping rows with missing values")
    matrix.means = filled.mean(axis=0)
    stds = filled.std(axis=0)
    matrix.stds = np.where(stds > 0, stds, 1.0)
    matrix.X = (filled - matrix.means) / matrix.stds
    return matrix
