import json

import numpy as np
import pytest

from config.config import Config
from data_model.ingest import ingest_cohort
from data_model.types import Task, TaskLabel
from features.catalog import FeatureCatalog
from preprocess.estimators import load_estimator
from preprocess.pipeline import preprocess_cohort
from synth.generator import SynthConfig, generate_cohort
from windowing.segments import WindowSegment, WindowSpec, segment_cohort

SMALL_CATALOG = {
    "version": "test",
    "features": [
        {"calculator": "summary_statistics"},
        {"calculator": "welch_band_power", "params": {"n_bands": 4}},
        {"calculator": "sample_entropy", "params": {"m": 2, "r": 0.2}},
        {"calculator": "number_crossing_m", "params": {"levels": ["zero", "mean"]}},
        {"calculator": "linear_trend"},
    ],
}

# 4 treatment / 2 placebo / 2 reference, 4-minute phases
TINY_SYNTH = {
    "n_treatment": 4,
    "n_placebo": 2,
    "n_reference": 2,
    "phase_duration_s": 240.0,
    "break_duration_s": 60.0,
    "margin_s": 30.0,
    "seed": 7,
}


@pytest.fixture(scope="session")
def tiny_config():
    return SynthConfig.desk_scale(**TINY_SYNTH)


@pytest.fixture(scope="session")
def tiny_config_file(tmp_path_factory, tiny_config):
    path = tmp_path_factory.mktemp("configs") / "synth.json"
    path.write_text(json.dumps(tiny_config.to_dict()), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def small_catalog():
    return FeatureCatalog.from_dict(SMALL_CATALOG)


@pytest.fixture(scope="session")
def small_catalog_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("configs") / "catalog.json"
    path.write_text(json.dumps(SMALL_CATALOG), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def estimator():
    return load_estimator(Config.SURROGATE_AROUSAL_PATH)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory, tiny_config):
    out_dir = tmp_path_factory.mktemp("cohort")
    generate_cohort(tiny_config, str(out_dir), threads=1)
    return str(out_dir)


@pytest.fixture(scope="session")
def cohort(synth_dir):
    return ingest_cohort(synth_dir)


@pytest.fixture(scope="session")
def derived_cohort(cohort, estimator):
    derived, _ = preprocess_cohort(cohort, estimator, threads=1)
    return derived


@pytest.fixture(scope="session")
def feature_windows(derived_cohort):
    return segment_cohort(derived_cohort, WindowSpec.feature(length_s=60, step_s=15))


@pytest.fixture
def make_window():
    """Factory for hand-built windows with explicit grids and labels."""

    def factory(participant_id="T01", phase_index=1, start_s=0.0, arousal=None, accel=None, length_s=8.0,
                labels=None, group="treatment", pipeline="cnn"):
        spec = WindowSpec(length_s=length_s, step_s=length_s, min_coverage=1.0 / 3.0, pipeline=pipeline)
        if arousal is None:
            arousal = np.zeros(spec.arousal_size)
        if accel is None:
            accel = np.ones(spec.accel_size)
        window = WindowSegment(
            participant_id=participant_id,
            phase_index=phase_index,
            start_s=start_s,
            spec=spec,
            arousal_grid=np.asarray(arousal, dtype=float),
            accel_grid=np.asarray(accel, dtype=float),
            coverage={"arousal": 1.0, "accel": 1.0},
            group=group,
            phase_start_s=0.0,
        )
        window.labels = {Task(task): TaskLabel(task, value) for task, value in (labels or {}).items()}
        return window

    return factory
