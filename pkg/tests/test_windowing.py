import math

import numpy as np
import pytest

from data_model.errors import ValidationError
from data_model.types import DrivingPhase, Modality, SampleSeries, Task
from windowing.grids import impute, resample_to_grid
from windowing.segments import WindowSpec, quarter_step, segment, window_count
from windowing.storage import load_windows, write_windows


def arousal_series(timestamps):
    timestamps = np.asarray(timestamps, dtype=float)
    return SampleSeries(Modality.AROUSAL_PROB, timestamps, np.full(timestamps.size, 0.5))


def accel_series(start_s, end_s):
    timestamps = np.arange(start_s * 25, end_s * 25) / 25.0
    return SampleSeries(Modality.ACCEL_MAG_G, timestamps, np.ones(timestamps.size))


def test_window_count():
    assert window_count(2400, 180, 45) == 50
    assert window_count(100, 180, 45) == 0
    assert window_count(180, 180, 45) == 1


def test_segment_counts_follow_window_formula():
    rng = np.random.default_rng(8)
    for _ in range(50):
        start = float(rng.integers(0, 100))
        duration = float(rng.integers(10, 600))
        length = float(rng.integers(10, 300))
        step = length / float(rng.choice([1, 2, 4]))
        phase = DrivingPhase("T01", 1, start, start + duration)
        series = {
            Modality.AROUSAL_PROB: arousal_series(np.arange(0.0, start + duration + 1)),
            Modality.ACCEL_MAG_G: accel_series(0, int(start + duration) + 1),
        }
        spec = WindowSpec(length_s=length, step_s=step, min_coverage=0.5)
        expected = max(0, math.floor((duration - length) / step) + 1)
        assert len(segment(series, [phase], spec)) == expected, (start, duration, length, step)
        assert window_count(duration, length, step) == expected


def test_quarter_step():
    lengths = [30, 60, 120, 180, 300, 450, 600]
    assert [quarter_step(length) for length in lengths] == [7.5, 15, 30, 45, 75, 112.5, 150]


def test_resample_identity():
    values = np.random.default_rng(0).random(180)
    series = SampleSeries(Modality.AROUSAL_PROB, np.arange(180.0), values)
    grid, coverage = resample_to_grid(series, 0.0, 180.0, 1)
    assert coverage == 1.0
    assert np.array_equal(grid, values)


def test_resample_half_coverage():
    grid, coverage = resample_to_grid(arousal_series(np.arange(0.0, 180.0, 2.0)), 0.0, 180.0, 1)
    assert coverage == 0.5
    assert np.isnan(grid[1::2]).all()


def test_resample_accel_grid_size():
    grid, coverage = resample_to_grid(accel_series(0, 180), 0.0, 180.0, 25)
    assert grid.shape == (4500,)
    assert coverage == 1.0


def test_resample_keeps_nearest_sample():
    series = SampleSeries(Modality.AROUSAL_PROB, [0.9, 1.2, 1.45], [0.1, 0.2, 0.3])
    grid, _ = resample_to_grid(series, 0.0, 3.0, 1)
    assert grid[1] == pytest.approx(0.1)


def test_impute():
    assert impute([1.0, np.nan, 3.0]).tolist() == [1.0, 2.0, 3.0]
    assert impute([np.nan, np.nan, 5.0, 7.0]).tolist() == [5.0, 5.0, 5.0, 7.0]
    assert impute([4.0]).tolist() == [4.0]
    assert impute([2.0, np.nan]).tolist() == [2.0, 2.0]
    with pytest.raises(ValidationError):
        impute([np.nan, np.nan])


def test_coverage_gate_depends_on_pipeline():
    phase = DrivingPhase("T01", 1, 0.0, 100.0)
    # 40 of 100 arousal grid points present
    series = {
        Modality.AROUSAL_PROB: arousal_series(np.arange(0.0, 40.0)),
        Modality.ACCEL_MAG_G: accel_series(0, 100),
    }
    feature = WindowSpec(length_s=100, step_s=100, min_coverage=0.5, pipeline="feature")
    cnn = WindowSpec(length_s=100, step_s=100, min_coverage=1.0 / 3.0, pipeline="cnn")

    assert segment(series, [phase], feature) == []
    kept = segment(series, [phase], cnn)
    assert len(kept) == 1
    assert kept[0].coverage["arousal"] == pytest.approx(0.4)
    assert not np.isnan(kept[0].arousal_grid).any()


def test_segment_windows_stay_inside_phases():
    phases = [DrivingPhase("T01", 1, 10.0, 130.0), DrivingPhase("T01", 2, 200.0, 260.0)]
    series = {
        Modality.AROUSAL_PROB: arousal_series(np.arange(0.0, 300.0)),
        Modality.ACCEL_MAG_G: accel_series(0, 300),
    }
    spec = WindowSpec(length_s=60, step_s=15, min_coverage=0.5)
    windows = segment(series, phases, spec)

    assert len(windows) == window_count(120, 60, 15) + window_count(60, 60, 15)
    for window in windows:
        phase = phases[window.phase_index - 1]
        assert phase.start_s <= window.start_s and window.end_s <= phase.end_s
        assert window.arousal_grid.shape == (60,)
        assert window.accel_grid.shape == (1500,)


def test_segmented_cohort_labels(feature_windows):
    assert feature_windows
    controls = [w for w in feature_windows if w.group != "treatment"]
    assert controls
    assert all(w.label(Task.EARLY_WARNING) == 0 and w.label(Task.ABOVE_LIMIT) == 0 for w in controls)
    for window in feature_windows:
        if window.label(Task.ABOVE_LIMIT):
            assert window.label(Task.EARLY_WARNING) == 1


def test_windows_survive_storage(tmp_path, feature_windows):
    subset = feature_windows[:5]
    write_windows(subset, str(tmp_path), subset[0].spec)
    loaded, spec, normalization = load_windows(str(tmp_path))

    assert spec == subset[0].spec
    assert normalization == "standard"
    assert [w.key for w in loaded] == [w.key for w in subset]
    assert np.allclose(loaded[0].accel_grid, subset[0].accel_grid, atol=1e-7)
    for task in (Task.EARLY_WARNING, Task.ABOVE_LIMIT, Task.PHASE_CATEGORICAL):
        assert loaded[0].label(task) == subset[0].label(task)
    assert loaded[0].label(Task.BAC_REGRESSION) == pytest.approx(subset[0].label(Task.BAC_REGRESSION), abs=1e-7)
