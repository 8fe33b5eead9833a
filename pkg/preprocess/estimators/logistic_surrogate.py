import json
import os

import numpy as np
from scipy.special import expit

from data_model.errors import ValidationError
from .base_estimator import ArousalEstimator


class LogisticSurrogateEstimator(ArousalEstimator):
    """
    Stand-in arousal model: logistic regression over the 13 short-window
    IBI/HR features. Weights come from a JSON file
    {"weights": [13 floats], "bias": float, "feature_order": [names]}.
    It does not reproduce any pretrained arousal model.
    """
    name = "logistic_surrogate"

    def __init__(self, weights, bias, feature_order, name=None, version="1"):
        from preprocess.arousal import AROUSAL_FEATURE_NAMES

        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(feature_order),):
            raise ValidationError(
                f"Surrogate has {weights.size} weights for {len(feature_order)} features"
            )
        unknown = set(feature_order) - set(AROUSAL_FEATURE_NAMES)
        missing = set(AROUSAL_FEATURE_NAMES) - set(feature_order)
        if unknown or missing:
            raise ValidationError(
                f"Surrogate feature_order mismatch; unknown: {sorted(unknown)}, missing: {sorted(missing)}"
            )
        if not np.all(np.isfinite(weights)) or not np.isfinite(bias):
            raise ValidationError("Surrogate weights and bias must be finite")
        self.weights = weights
        self.bias = float(bias)
        self.feature_order = list(feature_order)
        if name:
            self.name = name
        self.version = str(version)

    @classmethod
    def from_file(cls, path):
        if not os.path.isfile(path):
            raise ValidationError(f"Surrogate arousal model file not found: {path}")
        with open(path, "r", encoding="utf-8") as file:
            data = json.load(file)
        try:
            return cls(
                weights=data["weights"],
                bias=data["bias"],
                feature_order=data["feature_order"],
                name=data.get("name"),
                version=data.get("version", "1"),
            )
        except KeyError as e:
            raise ValidationError(f"Surrogate arousal model file {path} lacks key {e}")

    def logit(self, row):
        values = np.array([getattr(row, name) for name in self.feature_order], dtype=float)
        return float(values @ self.weights + self.bias)

    def predict(self, row):
        return float(expit(self.logit(row)))

    def predict_batch(self, matrix, feature_order):
        matrix = np.asarray(matrix, dtype=float)
        index = [list(feature_order).index(name) for name in self.feature_order]
        return expit(matrix[:, index] @ self.weights + self.bias)
