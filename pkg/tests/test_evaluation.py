import itertools

import numpy as np
import pandas as pd
import pytest

from data_model.errors import ValidationError
from data_model.types import Task
from evaluation import (
    aggregate,
    auprc,
    auroc,
    cma_smooth,
    cumulative_moving_average,
    delong_ci,
    make_loso_plan,
    multiclass_auroc,
    prevalence,
    regression_eval,
    roc_curve,
)
from evaluation.loso import validation_size_for
from evaluation.metrics import delong_variance


def brute_force_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return total / (len(pos) * len(neg))


def binary_frame(rows):
    return pd.DataFrame(rows, columns=["participant", "group", "label", "score"])


def test_auroc_examples():
    assert auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
    assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auroc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5
    with pytest.raises(ValidationError):
        auroc([0.1, 0.2], [1, 1])


def random_binary_instance(rng):
    n = int(rng.integers(2, 51))
    labels = (rng.random(n) < rng.uniform(0.1, 0.9)).astype(int)
    labels[:2] = (0, 1)
    if rng.random() < 0.5:
        scores = rng.integers(0, 4, n).astype(float)
    else:
        scores = np.round(rng.random(n), 1)
    return scores, labels


def test_auroc_matches_pairwise_definition():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        scores, labels = random_binary_instance(rng)
        assert auroc(scores, labels) == pytest.approx(brute_force_auroc(scores, labels), abs=1e-12), (scores, labels)


def test_auroc_complement_and_rank_invariance():
    rng = np.random.default_rng(0)
    scores = np.round(rng.random(60), 1)
    labels = (rng.random(60) < 0.4).astype(int)
    assert auroc(-scores, labels) == pytest.approx(1 - auroc(scores, labels))
    assert auroc(np.exp(3 * scores), labels) == pytest.approx(auroc(scores, labels))


def test_auprc_examples():
    assert auprc([0.9, 0.8, 0.7], [1, 0, 1]) == pytest.approx(0.5 + 0.5 * 2 / 3)
    assert auprc([0.9, 0.8], [1, 0]) == 1.0
    assert auprc([0.5, 0.5], [1, 0]) == 0.5
    assert prevalence([1, 0, 0, 0]) == 0.25
    with pytest.raises(ValidationError):
        auprc([0.1, 0.2], [0, 0])


@pytest.mark.parametrize("p", [1 / 3, 0.19, 0.38])
def test_random_scores_auprc_equals_prevalence(p):
    rng = np.random.default_rng(int(p * 1000))
    n = 5000
    labels = np.zeros(n, dtype=int)
    labels[: int(round(p * n))] = 1
    values = [auprc(rng.random(n), rng.permutation(labels)) for _ in range(10)]
    assert prevalence(labels) == pytest.approx(p, abs=1e-3)
    assert np.mean(values) == pytest.approx(p, abs=0.02)


def test_roc_curve_endpoints():
    fpr, tpr, thresholds = roc_curve([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert (fpr[0], tpr[0]) == (0.0, 0.0)
    assert (fpr[-1], tpr[-1]) == (1.0, 1.0)
    assert np.isinf(thresholds[0])
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)


def test_delong_interval():
    assert delong_ci([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == (1.0, 1.0)

    rng = np.random.default_rng(1)
    labels = np.r_[np.zeros(50), np.ones(50)].astype(int)
    scores = rng.standard_normal(100) + labels
    auc = auroc(scores, labels)
    narrow = delong_ci(scores, labels, 0.5)
    wide = delong_ci(scores, labels, 0.95)
    assert wide[0] < narrow[0] < auc < narrow[1] < wide[1]
    with pytest.raises(ValidationError):
        delong_ci([0.1, 0.9, 0.8], [0, 1, 1])


def test_delong_variance_agrees_with_bootstrap():
    rng = np.random.default_rng(2)
    labels = np.r_[np.zeros(100), np.ones(100)].astype(int)
    scores = rng.standard_normal(200) + labels
    _, variance = delong_variance(scores, labels)

    negatives, positives = np.flatnonzero(labels == 0), np.flatnonzero(labels == 1)
    resampled = []
    for _ in range(2000):
        index = np.r_[rng.choice(negatives, negatives.size), rng.choice(positives, positives.size)]
        resampled.append(auroc(scores[index], labels[index]))
    assert variance == pytest.approx(np.var(resampled, ddof=1), rel=0.2)


def test_multiclass_auroc():
    probabilities = np.eye(3)[[0, 1, 2, 0]]
    assert multiclass_auroc(probabilities, [1, 2, 3, 1]) == 1.0
    with pytest.raises(ValidationError):
        multiclass_auroc(probabilities[:, :2], [1, 2, 3, 1])


def test_loso_validation_sizes():
    ids = [f"T{i:02d}" for i in range(54)]
    assert make_loso_plan(ids, seed=0).validation_size == 10
    assert make_loso_plan(ids[:12], seed=0).validation_size == 2
    assert make_loso_plan(ids[:4], seed=0).validation_size == 2
    assert validation_size_for(39) == 10
    assert validation_size_for(20) == 10
    assert validation_size_for(19) == 3
    with pytest.raises(ValidationError):
        make_loso_plan(ids[:3])
    with pytest.raises(ValidationError):
        make_loso_plan(["T01", "T01", "T02", "T03"])


def test_loso_logs_the_validation_fallback(caplog):
    ids = [f"T{i:02d}" for i in range(22)]
    with caplog.at_level("WARNING", logger="evaluation.loso"):
        assert make_loso_plan(ids, seed=0).validation_size == 10
    assert not caplog.records
    with caplog.at_level("WARNING", logger="evaluation.loso"):
        assert make_loso_plan(ids[:20], seed=0).validation_size == 3
    assert "using 3 per fold" in caplog.text


def test_loso_folds_partition_participants():
    ids = [f"T{i:02d}" for i in range(20)]
    plan = make_loso_plan(ids, seed=3)
    assert [fold.held_out for fold in plan] == ids
    for fold in plan:
        assert fold.held_out not in fold.train + fold.validation
        assert set(fold.train).isdisjoint(fold.validation)
        assert sorted(fold.train + fold.validation + (fold.held_out,)) == ids
    assert make_loso_plan(ids, seed=3) == plan
    assert make_loso_plan(ids, seed=4) != plan


def test_aggregate_single_participant():
    report = aggregate(binary_frame([("T01", "treatment", 0, 0.2), ("T01", "treatment", 1, 0.7)]), Task.EARLY_WARNING)
    assert report.macro["auroc"] == {"mean": 1.0, "std": 0.0, "n": 1}


def test_macro_and_pooled_auroc_differ():
    frame = binary_frame([
        ("T01", "treatment", 0, 0.1), ("T01", "treatment", 1, 0.2),
        ("T02", "treatment", 0, 0.8), ("T02", "treatment", 1, 0.9),
    ])
    report = aggregate(frame, Task.EARLY_WARNING, scope="treatment")
    assert report.macro["auroc"]["mean"] == 1.0
    assert report.pooled["treatment"]["auroc"] == pytest.approx(0.75)
    assert "all" not in report.pooled


def test_aggregate_scopes_and_exclusions():
    frame = binary_frame([
        ("T01", "treatment", 0, 0.1), ("T01", "treatment", 1, 0.9),
        ("T02", "treatment", 1, 0.6), ("T02", "treatment", 1, 0.7),
        ("P01", "placebo", 0, 0.95), ("P01", "placebo", 0, 0.05),
    ])
    report = aggregate(frame, Task.EARLY_WARNING, scope="all")
    assert report.excluded == ["T02"]
    assert report.macro["auroc"]["n"] == 1
    assert report.pooled["treatment"]["n_windows"] == 4
    assert report.pooled["all"]["n_windows"] == 6
    assert report.pooled["all"]["baseline_auprc"] == pytest.approx(0.5)
    assert "roc_all" in report.curves
    with pytest.raises(ValidationError):
        aggregate(frame, Task.EARLY_WARNING, scope="placebo")


def test_aggregate_needs_treatment_participants():
    with pytest.raises(ValidationError):
        aggregate(binary_frame([("P01", "placebo", 0, 0.1), ("P01", "placebo", 1, 0.2)]), Task.EARLY_WARNING)


def test_cumulative_moving_average():
    assert cumulative_moving_average([0.2, 0.4, 0.6]) == pytest.approx([0.2, 0.3, 0.4])


def test_cma_smoothing_within_segment():
    frame = pd.DataFrame({
        "participant": ["T01"] * 3 + ["T02"] * 3,
        "phase": [2] * 6,
        "phase_start_s": [100.0] * 6,
        "start_s": [100.0, 115.0, 130.0] * 2,
        "score": [0.2, 0.4, 0.6, 0.1, 0.1, 0.1],
        "label": [1, 1, 1, 0, 0, 0],
    })
    smoothed, curve = cma_smooth(frame, window_length_s=60, bin_s=15)
    assert smoothed["smoothed_score"].tolist()[:3] == pytest.approx([0.2, 0.3, 0.4])
    assert smoothed["elapsed_s"].tolist()[:3] == [60.0, 75.0, 90.0]
    assert curve["elapsed_s"].tolist() == [60.0, 75.0, 90.0]
    assert curve["auroc"].tolist() == [1.0, 1.0, 1.0]
    assert curve["n_windows"].tolist() == [2, 4, 6]


def test_regression_eval():
    result = regression_eval([0.02, 0.06, 0.04, 0.08], [0.03, 0.05, 0.04, 0.07])
    assert result["mae"] == pytest.approx(0.0075)
    assert result["pearson_r"] > 0.9
    assert result["auroc_above_limit"] == 1.0
    assert result["threshold"] == 0.05
    with pytest.raises(ValidationError):
        regression_eval([0.02, 0.02], [0.03, 0.05])
