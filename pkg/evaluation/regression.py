import logging

import numpy as np
from scipy import stats

from config.config import Config
from data_model.errors import ValidationError
from evaluation.metrics import auroc

logger = logging.getLogger(__name__)


def regression_eval(predictions, reference, threshold=None):
    """
    MAE, Pearson r and the AUROC of the predictions as scores against
    reference > threshold (the legal-limit label, 0.05 g/dL by default).
    """
    threshold = Config.ABOVE_LIMIT_THRESHOLD if threshold is None else threshold
    predictions = np.asarray(predictions, dtype=float).reshape(-1)
    reference = np.asarray(reference, dtype=float).reshape(-1)
    if predictions.size != reference.size or predictions.size < 2:
        raise ValidationError("Regression evaluation needs at least two paired values")
    if not (np.all(np.isfinite(predictions)) and np.all(np.isfinite(reference))):
        raise ValidationError("Regression evaluation needs finite values")
    if np.ptp(predictions) == 0 or np.ptp(reference) == 0:
        raise ValidationError("Pearson correlation is undefined for zero-variance inputs")

    labels = (reference > threshold).astype(int)
    if 0 < labels.sum() < labels.size:
        score = auroc(predictions, labels)
    else:
        logger.warning("All reference values fall on one side of %.3f g/dL; thresholded AUROC undefined", threshold)
        score = np.nan
    return {
        "n_windows": int(predictions.size),
        "mae": float(np.mean(np.abs(predictions - reference))),
        "pearson_r": float(stats.pearsonr(predictions, reference)[0]),
        "auroc_above_limit": score,
        "threshold": float(threshold),
    }
