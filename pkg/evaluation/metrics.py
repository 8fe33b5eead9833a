"""
Ranking metrics: AUROC, AUPRC, curve points and DeLong confidence intervals.
"""
import numpy as np
from scipy import stats

from config.config import Config
from data_model.errors import ValidationError


def _binary_inputs(scores, labels):
    scores = np.asarray(scores, dtype=float).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.size != labels.size:
        raise ValidationError(f"{scores.size} scores for {labels.size} labels")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("Scores contain non-finite values")
    if not np.all(np.isin(labels, (0, 1))):
        raise ValidationError("Labels must be binary 0/1")
    return scores, labels.astype(int)


def auroc(scores, labels):
    """
    Mann-Whitney AUROC: mean over (positive, negative) pairs of
    [s+ > s-] + 0.5 [s+ = s-], via the rank sum with average ranks.
    """
    scores, labels = _binary_inputs(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUROC needs both classes")
    ranks = stats.rankdata(scores, method="average")
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _threshold_counts(scores, labels):
    """Cumulative TP/FP at each distinct score, sweeping from the highest score down."""
    order = np.argsort(-scores, kind="mergesort")
    scores, labels = scores[order], labels[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(scores)), scores.size - 1]
    tp = np.cumsum(labels)[last_of_group]
    fp = (last_of_group + 1) - tp
    return tp, fp, scores[last_of_group]


def auprc(scores, labels):
    """Average precision: sum over thresholds of (R_k - R_{k-1}) * P_k, ties grouped."""
    scores, labels = _binary_inputs(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValidationError("AUPRC needs at least one positive")
    tp, fp, _ = _threshold_counts(scores, labels)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def prevalence(labels):
    """Positive-class prevalence: the AUPRC of an uninformative classifier."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValidationError("Prevalence of an empty label set")
    return float(np.mean(labels == 1))


def roc_curve(scores, labels):
    """(fpr, tpr, thresholds), starting at (0, 0) with threshold +inf."""
    scores, labels = _binary_inputs(scores, labels)
    n_pos = labels.sum()
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC curve needs both classes")
    tp, fp, thresholds = _threshold_counts(scores, labels)
    return np.r_[0.0, fp / n_neg], np.r_[0.0, tp / n_pos], np.r_[np.inf, thresholds]


def pr_curve(scores, labels):
    """(recall, precision, thresholds) at every distinct score, highest threshold first."""
    scores, labels = _binary_inputs(scores, labels)
    n_pos = labels.sum()
    if n_pos == 0:
        raise ValidationError("PR curve needs at least one positive")
    tp, fp, thresholds = _threshold_counts(scores, labels)
    return tp / n_pos, tp / (tp + fp), thresholds


def delong_variance(scores, labels):
    """
    DeLong variance of the AUROC from placement values (midranks).
    Returns (auc, variance).
    """
    scores, labels = _binary_inputs(scores, labels)
    positives, negatives = scores[labels == 1], scores[labels == 0]
    m, n = positives.size, negatives.size
    if m < 2 or n < 2:
        raise ValidationError("DeLong variance needs at least two samples of each class")
    combined = stats.rankdata(np.r_[positives, negatives], method="average")
    within_pos = stats.rankdata(positives, method="average")
    within_neg = stats.rankdata(negatives, method="average")
    v10 = (combined[:m] - within_pos) / n
    v01 = 1.0 - (combined[m:] - within_neg) / m
    auc = float(v10.mean())
    variance = float(np.var(v10, ddof=1) / m + np.var(v01, ddof=1) / n)
    return auc, variance


def delong_ci(scores, labels, level=None):
    """Normal-approximation DeLong confidence interval for the AUROC, clipped to [0, 1]."""
    level = Config.DELONG_LEVEL if level is None else level
    if not 0 < level < 1:
        raise ValidationError(f"Confidence level must lie in (0, 1), got {level}")
    auc, variance = delong_variance(scores, labels)
    half_width = stats.norm.ppf(0.5 + level / 2.0) * np.sqrt(max(variance, 0.0))
    return float(max(0.0, auc - half_width)), float(min(1.0, auc + half_width))


def multiclass_auroc(probabilities, labels, classes=(1, 2, 3)):
    """Macro one-vs-rest AUROC over the classes that occur with both outcomes."""
    return _one_vs_rest(auroc, probabilities, labels, classes)


def multiclass_auprc(probabilities, labels, classes=(1, 2, 3)):
    return _one_vs_rest(auprc, probabilities, labels, classes)


def multiclass_baseline(labels, classes=(1, 2, 3)):
    """Random macro AUPRC: mean class prevalence over the classes present."""
    labels = np.asarray(labels)
    present = [c for c in classes if np.any(labels == c)]
    return float(np.mean([np.mean(labels == c) for c in present]))


def _one_vs_rest(metric, probabilities, labels, classes):
    probabilities = np.asarray(probabilities, dtype=float)
    labels = np.asarray(labels).reshape(-1)
    if probabilities.ndim != 2 or probabilities.shape != (labels.size, len(classes)):
        raise ValidationError(f"Expected probabilities of shape ({labels.size}, {len(classes)}), got {probabilities.shape}")
    values = []
    for column, cls in enumerate(classes):
        binary = (labels == cls).astype(int)
        if 0 < binary.sum() < binary.size:
            values.append(metric(probabilities[:, column], binary))
    if not values:
        raise ValidationError("No class occurs together with another class")
    return float(np.mean(values))
