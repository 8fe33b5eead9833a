import numpy as np
import pytest

from data_model.errors import ValidationError
from features.calculators import CALCULATORS, FAMILIES, decimate_mean
from features.catalog import FeatureCatalog
from features.design_matrix import assemble_design_matrix
from features.extraction import FeatureVector, extract_features, feature_frame, load_features, write_features


def run(name, x, rate_hz=1, **params):
    return CALCULATORS[name](np.asarray(x, dtype=float), rate_hz, **params)


def vector(index, values, modality="accel", family="summary"):
    return {modality: FeatureVector(("T01", 1, float(index)), modality, values, {name: family for name in values})}


def test_constant_series():
    x = np.full(180, 2.0)
    assert run("summary_statistics", x)["variance"] == 0.0
    assert run("sample_entropy", x)["sample_entropy__m_2__r_0.2"] == 0.0
    assert run("number_crossing_m", x)["number_crossing_m__m_zero"] == 0.0
    assert run("number_peaks", x)["number_peaks__n_1"] == 0.0


def test_sine_dominant_fft_coefficient():
    x = np.sin(2 * np.pi * 3 * np.arange(180) / 180)
    values = run("fft_coefficient", x, coeffs=tuple(range(8)), attrs=("abs",))
    magnitudes = [values[f"fft_coefficient__coeff_{k}__attr_abs"] for k in range(8)]
    assert int(np.argmax(magnitudes)) == 3


def test_ramp_linear_trend():
    values = run("linear_trend", np.arange(180))
    assert values["linear_trend__attr_slope"] == pytest.approx(1.0)
    assert values["linear_trend__attr_rvalue"] == pytest.approx(1.0)


def test_short_series_is_missing():
    values = run("ar_coefficient", [1.0, 2.0, 3.0], order=5)
    assert all(np.isnan(v) for v in values.values())
    assert np.isnan(run("number_peaks", [1.0, 2.0, 1.0], supports=(3,))["number_peaks__n_3"])


def test_feature_names_do_not_depend_on_data():
    rng = np.random.default_rng(1)
    for name in CALCULATORS:
        a = run(name, rng.standard_normal(120), rate_hz=25)
        b = run(name, np.full(120, 1.0), rate_hz=25)
        assert list(a) == list(b), name


def test_every_family_is_covered():
    assert {c.family for c in CALCULATORS.values()} == set(FAMILIES)


def test_sample_entropy_of_noise_exceeds_sine():
    t = np.arange(600)
    sine = run("sample_entropy", np.sin(2 * np.pi * t / 50))["sample_entropy__m_2__r_0.2"]
    noise = run("sample_entropy", np.random.default_rng(2).standard_normal(600))["sample_entropy__m_2__r_0.2"]
    assert noise > sine


def test_decimate_mean():
    assert decimate_mean(np.arange(6.0), 3).tolist() == [0.5, 2.5, 4.5]
    assert decimate_mean(np.arange(4.0), 10).tolist() == [0.0, 1.0, 2.0, 3.0]


def test_catalog_validation():
    with pytest.raises(ValidationError):
        FeatureCatalog.from_dict({"features": [{"calculator": "nonexistent"}]})
    with pytest.raises(ValidationError):
        FeatureCatalog.from_dict({"features": [{"calculator": "quantile", "params": {"levels": [0.5]}}]})
    with pytest.raises(ValidationError):
        FeatureCatalog.from_dict({"features": []})


def test_default_catalog_loads():
    catalog = FeatureCatalog.from_file()
    assert set(catalog.families) == set(FAMILIES)
    assert len(catalog.digest) == 64


def test_extract_features(make_window, small_catalog):
    rng = np.random.default_rng(3)
    window = make_window(arousal=rng.random(60), accel=1 + 0.01 * rng.standard_normal(1500), length_s=60)
    vectors = extract_features(window, small_catalog)

    assert set(vectors) == {"arousal", "accel"}
    assert vectors["accel"].names == vectors["arousal"].names
    assert vectors["accel"].families["variance"] == "summary"
    assert vectors["accel"].window_key == window.key


def test_features_survive_storage(tmp_path, make_window, small_catalog):
    rng = np.random.default_rng(4)
    windows = [make_window(start_s=float(i), arousal=rng.random(60), accel=rng.random(1500), length_s=60) for i in range(3)]
    vectors = [extract_features(w, small_catalog) for w in windows]
    write_features(vectors, str(tmp_path), small_catalog)
    loaded = load_features(str(tmp_path))

    assert len(loaded) == 3
    assert feature_frame(loaded).columns.tolist() == feature_frame(vectors).columns.tolist()
    assert loaded[1]["accel"].values["variance"] == pytest.approx(vectors[1]["accel"].values["variance"])


def test_design_matrix_drops_missing_column():
    features = [vector(i, {"variance": float(i), "similarity": np.nan}) for i in range(4)]
    design = assemble_design_matrix(features)
    assert design.columns == ["accel__variance"]
    assert design.dropped == {"accel__similarity": 1.0}


def test_design_matrix_standardizes():
    features = [vector(i, {"a": float(i), "b": 2.0 * i + 1}) for i in range(4)]
    design = assemble_design_matrix(features)
    raw = np.array([[i, 2.0 * i + 1] for i in range(4)])
    expected = (raw - raw.mean(axis=0)) / raw.std(axis=0)
    assert np.allclose(design.X, expected)


def test_design_matrix_median_imputation():
    features = [vector(i, {"a": v}) for i, v in enumerate([1.0, np.nan, 3.0, 10.0, 2.0])]
    design = assemble_design_matrix(features)
    # training median of the observed cells [1, 3, 10, 2]
    raw = np.array([1.0, 2.5, 3.0, 10.0, 2.0])
    expected = (raw - raw.mean()) / raw.std()
    assert np.allclose(design.X[:, 0], expected)


def test_design_matrix_drop_mode():
    features = [vector(i, {"a": v}) for i, v in enumerate([1.0, np.nan, 3.0, 10.0])]
    design = assemble_design_matrix(features, impute="drop")
    assert design.X.shape == (3, 1)
    assert ("T01", 1, 1.0) not in design.keys


def test_design_matrix_transform_replays_training_statistics():
    train = [vector(i, {"a": float(i)}) for i in range(4)]
    design = assemble_design_matrix(train)
    X_test, keys = design.transform([vector(10, {"a": np.nan}), vector(11, {"a": 1.5})])
    assert X_test[:, 0] == pytest.approx([0.0, 0.0])
    assert keys == [("T01", 1, 10.0), ("T01", 1, 11.0)]


def test_design_matrix_restricts_modalities():
    features = []
    for i in range(3):
        both = dict(vector(i, {"a": float(i)}, modality="accel"))
        both.update(vector(i, {"a": float(-i)}, modality="arousal"))
        features.append(both)
    design = assemble_design_matrix(features, modalities=("arousal",))
    assert design.columns == ["arousal__a"]
