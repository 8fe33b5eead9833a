from dataclasses import replace

import pytest

from data_model.ingest import ingest_cohort
from data_model.types import Task
from evaluation.pipelines import run_cnn_experiment, run_lr_experiment
from features.catalog import FeatureCatalog
from features.extraction import extract_all
from neural.training import TrainConfig
from preprocess.pipeline import preprocess_cohort
from synth.generator import EffectConfig, SynthConfig, generate_cohort
from windowing.segments import WindowSpec, segment_cohort

pytestmark = pytest.mark.slow

PIPELINE_CATALOG = FeatureCatalog.from_dict({
    "version": "pipeline-test",
    "features": [
        {"calculator": "summary_statistics"},
        {"calculator": "welch_band_power", "params": {"n_bands": 4}},
        {"calculator": "autocorrelation", "params": {"lags": [1, 2, 3]}},
        {"calculator": "cid_ce", "params": {"normalize": [True, False]}},
        {"calculator": "linear_trend"},
    ],
})

NULL_EFFECT = EffectConfig().scaled(0.0)
LARGE_EFFECT = EffectConfig().scaled(1.8)
ACCEL_ONLY = replace(NULL_EFFECT, accel_roughness=4.0)
# step effects: full intensity from the first second of phases 2 and 3
LEVEL_SHIFT_ONLY = replace(NULL_EFFECT, accel_level_shift_g=0.5, onset_ramp_s=0.0, saturation_bac=0.01)
ROUGHNESS_ONLY = replace(ACCEL_ONLY, onset_ramp_s=0.0, saturation_bac=0.01)
# intensity proportional to BAC, so severe and moderate phases differ
GRADED_EFFECT = replace(LARGE_EFFECT, saturation_bac=0.086)

CNN_TRAINING = {"lr": 3e-3, "batch_size": 32, "max_epochs": 4, "early_stopping_patience": 2}


@pytest.fixture(scope="module")
def desk_cohort(tmp_path_factory, estimator):
    """Preprocessed default-size cohorts, one per effect configuration."""
    cache = {}

    def build(effect):
        if effect not in cache:
            out_dir = str(tmp_path_factory.mktemp("desk"))
            generate_cohort(SynthConfig.desk_scale(effect=effect, seed=11), out_dir)
            cache[effect], _ = preprocess_cohort(ingest_cohort(out_dir), estimator)
        return cache[effect]

    return build


def lr_auroc(windows, vectors=None, modalities=("arousal", "accel")):
    result = run_lr_experiment(windows, Task.EARLY_WARNING, catalog=PIPELINE_CATALOG, vectors=vectors,
                               seed=0, modalities=modalities)
    return result.report.pooled["treatment"]["auroc"]


def cnn_windows(cohort):
    return segment_cohort(cohort, WindowSpec.cnn(length_s=20, step_s=20))


def treatment_ids(windows):
    return sorted({w.participant_id for w in windows if w.group == "treatment"})


def test_default_cohort_shape(desk_cohort):
    cohort = desk_cohort(LARGE_EFFECT)
    groups = [str(record.group) for record in cohort]
    assert len(groups) == 22
    assert (groups.count("treatment"), groups.count("placebo"), groups.count("reference")) == (12, 5, 5)


@pytest.mark.parametrize("effect, low, high", [(LARGE_EFFECT, 0.90, 1.0), (NULL_EFFECT, 0.45, 0.55)])
def test_lr_recovers_planted_effect(desk_cohort, effect, low, high):
    windows = segment_cohort(desk_cohort(effect), WindowSpec.feature(length_s=60, step_s=15))
    assert low <= lr_auroc(windows) <= high


@pytest.mark.parametrize("effect, low, high", [(LARGE_EFFECT, 0.90, 1.0), (NULL_EFFECT, 0.45, 0.55)])
def test_cnn_recovers_planted_effect(desk_cohort, effect, low, high):
    windows = cnn_windows(desk_cohort(effect))
    config = TrainConfig.from_dict(**CNN_TRAINING)
    result = run_cnn_experiment(windows, Task.EARLY_WARNING, config, seed=0, held_out=treatment_ids(windows))
    assert set(result.histories) == set(treatment_ids(windows))
    assert low <= result.report.pooled["treatment"]["auroc"] <= high


def test_modality_ablation_follows_the_affected_stream(desk_cohort):
    windows = segment_cohort(desk_cohort(ACCEL_ONLY), WindowSpec.feature(length_s=60, step_s=15))
    vectors = extract_all(windows, PIPELINE_CATALOG)
    accel = lr_auroc(windows, vectors, ("accel",))
    arousal = lr_auroc(windows, vectors, ("arousal",))
    combined = lr_auroc(windows, vectors)
    assert accel >= arousal + 0.15
    assert combined >= max(accel, arousal) - 0.02


def test_per_phase_normalization_removes_level_shifts(desk_cohort):
    spec = WindowSpec.feature(length_s=60, step_s=15)
    shifted = segment_cohort(desk_cohort(LEVEL_SHIFT_ONLY), spec, normalization="per_phase")
    assert lr_auroc(shifted) == pytest.approx(0.5, abs=0.05)

    rough = segment_cohort(desk_cohort(ROUGHNESS_ONLY), spec, normalization="per_phase")
    assert lr_auroc(rough) >= 0.85


def test_phase_classification_needs_an_effect(desk_cohort):
    windows = cnn_windows(desk_cohort(GRADED_EFFECT))
    config = TrainConfig.from_dict(**CNN_TRAINING)
    control = run_cnn_experiment(windows, Task.PHASE_CATEGORICAL, config, seed=0, group="control")
    treatment = run_cnn_experiment(windows, Task.PHASE_CATEGORICAL, config, seed=0, group="treatment")
    assert 0.45 <= control.report.pooled["all"]["auroc"] <= 0.60
    assert treatment.report.pooled["all"]["auroc"] >= 0.85
