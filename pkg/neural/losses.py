"""
Training losses. Each returns (mean loss, gradient w.r.t. the logits/predictions).
"""
import numpy as np
from scipy.special import expit, log_softmax, softmax

from data_model.errors import ValidationError


def _check_finite(*arrays):
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise ValidationError("Loss inputs contain NaN or infinite values")


def weighted_bce(logits, targets, class_weights=None):
    """
    Class-weighted binary cross-entropy on logits, averaged over the batch.

    loss_i = w_{y_i} * (softplus(z_i) - y_i * z_i)
    """
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    _check_finite(logits, targets)
    if logits.size != targets.size:
        raise ValidationError(f"{logits.size} logits for {targets.size} targets")
    weights = np.ones_like(targets)
    if class_weights is not None:
        weights = np.where(targets == 1, class_weights[1], class_weights[0])
    per_sample = weights * (np.logaddexp(0.0, logits) - targets * logits)
    grad = weights * (expit(logits) - targets) / logits.size
    return float(per_sample.mean()), grad.reshape(-1, 1)


def cross_entropy(logits, targets, class_weights=None):
    """
    Class-weighted categorical cross-entropy; targets are class indices 0..K-1.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=int).reshape(-1)
    _check_finite(logits)
    if logits.ndim != 2 or logits.shape[0] != targets.size:
        raise ValidationError(f"Logits {logits.shape} do not match {targets.size} targets")
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= logits.shape[1]:
        raise ValidationError("Class targets out of range")
    weights = np.ones(targets.size) if class_weights is None else np.asarray(class_weights, dtype=float)[targets]
    rows = np.arange(targets.size)
    log_probs = log_softmax(logits, axis=1)
    loss = float(np.mean(-weights * log_probs[rows, targets]))
    grad = softmax(logits, axis=1)
    grad[rows, targets] -= 1.0
    return loss, grad * weights[:, None] / targets.size


def smooth_l1(predictions, targets, beta=1.0):
    """Huber-style smooth L1: 0.5 r^2 / beta when |r| < beta, |r| - 0.5 beta otherwise."""
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    _check_finite(predictions, targets)
    residual = predictions - targets
    small = np.abs(residual) < beta
    per_sample = np.where(small, 0.5 * residual ** 2 / beta, np.abs(residual) - 0.5 * beta)
    grad = np.where(small, residual / beta, np.sign(residual)) / residual.size
    return float(per_sample.mean()), grad.reshape(-1, 1)


LOSSES = {
    "binary": weighted_bce,
    "categorical": cross_entropy,
    "regression": smooth_l1,
}
