import numpy as np
import pytest
from scipy.special import expit

from data_model.errors import ConvergenceWarning, ValidationError
from linear_model.coefficients import coefficient_family_report
from linear_model.lasso_logit import (
    LassoLogitModel,
    balanced_class_weights,
    fit_lasso_logit,
    lambda_max,
    load_model,
    predict_proba,
    sample_weights,
    save_model,
)


def random_problem(seed=0, n=20, p=5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    y = (X[:, 0] - X[:, 1] + 0.5 * rng.standard_normal(n) > 0).astype(int)
    y[:2] = (0, 1)
    return X, y


def model(weights, bias=0.0, columns=(), families=None, task="early_warning"):
    return LassoLogitModel(
        weights=np.asarray(weights, dtype=float),
        bias=bias,
        lam=0.0,
        class_weights={0: 1.0, 1: 1.0},
        columns=list(columns),
        families=dict(families or {}),
        task=task,
    )


def test_balanced_class_weights():
    weights = balanced_class_weights(np.array([1, 0, 0, 0]))
    assert weights == {0: pytest.approx(4 / 6), 1: pytest.approx(2.0)}


def test_huge_lambda_zeroes_weights():
    X, y = random_problem()
    fitted = fit_lasso_logit(X, y, lam=1e6)
    assert np.all(fitted.weights == 0)
    assert fitted.bias == pytest.approx(0.0, abs=1e-9)
    assert fitted.converged


def test_lambda_max_is_the_zero_threshold():
    X, y = random_problem()
    lam = lambda_max(X, y)
    assert np.all(fit_lasso_logit(X, y, lam=lam * 1.001).weights == 0)
    assert np.any(fit_lasso_logit(X, y, lam=lam * 0.5).weights != 0)


def test_unpenalized_separable_problem():
    X = np.array([[1.0], [-1.0]])
    y = np.array([1, 0])
    with pytest.warns(ConvergenceWarning):
        fitted = fit_lasso_logit(X, y, lam=0.0, max_sweeps=50)

    history = np.array(fitted.objective_history)
    assert np.all(np.diff(history) <= 1e-12)
    assert history[-1] < history[0]
    assert not fitted.converged
    scores = predict_proba(fitted, X)
    assert scores[0] > scores[1]


def test_kkt_conditions_at_solution():
    X, y = random_problem(seed=3)
    lam = 0.05
    fitted = fit_lasso_logit(X, y, lam=lam)
    assert fitted.converged

    s, _ = sample_weights(y, fitted.class_weights)
    residual = s * (expit(X @ fitted.weights + fitted.bias) - y) / y.size
    gradient = X.T @ residual
    zero = fitted.weights == 0
    assert np.all(np.abs(gradient[zero]) <= lam + 1e-5)
    assert np.all(np.abs(gradient[~zero] + lam * np.sign(fitted.weights[~zero])) <= 1e-5)
    assert abs(residual.sum()) <= 1e-5


def test_fit_rejects_single_class():
    X, _ = random_problem()
    with pytest.raises(ValidationError):
        fit_lasso_logit(X, np.zeros(20, dtype=int))


def test_predict_proba():
    assert predict_proba(model([0.0, 0.0]), np.ones((3, 2))) == pytest.approx([0.5, 0.5, 0.5])
    assert predict_proba(model([np.log(3)]), np.array([[1.0]]))[0] == pytest.approx(0.75)
    with pytest.raises(ValidationError):
        predict_proba(model([1.0]), np.ones((2, 2)))
    with pytest.raises(ValidationError):
        predict_proba(model([1.0], columns=["accel__a"]), np.ones((2, 1)), columns=["accel__b"])


def test_model_file(tmp_path):
    original = model([0.5, 0.0], bias=-0.2, columns=["accel__a", "accel__b"], families={"accel__a": "entropy"})
    path = str(tmp_path / "fold_T01.json")
    save_model(original, path)
    restored = load_model(path)
    assert restored.weights.tolist() == [0.5, 0.0]
    assert restored.columns == original.columns
    assert restored.column_metadata_hash == original.column_metadata_hash


def test_family_report_all_zero():
    columns = ["accel__a", "accel__b"]
    report = coefficient_family_report([model([0.0, 0.0], columns=columns, families={"accel__a": "entropy", "accel__b": "summary"})])
    assert report["family"].tolist() == ["entropy", "summary", "all"]
    assert report["mean_abs_coef"].tolist() == [0.0, 0.0, 0.0]


def test_family_report_ends_with_overall_row():
    columns = ["accel__a", "accel__b", "arousal__c"]
    families = {"accel__a": "entropy", "accel__b": "summary", "arousal__c": "summary"}
    report = coefficient_family_report([model([0.4, 0.0, 0.3], columns=columns, families=families)])
    assert report["modality"].tolist() == ["accel", "accel", "accel", "arousal", "arousal"]
    overall = report[report["status"] == "overall"].set_index("modality")
    assert overall.loc["accel", "family"] == "all"
    assert overall.loc["accel", "mean_abs_coef"] == pytest.approx(0.2)
    assert overall.loc["accel", "std_abs_coef"] == pytest.approx(0.2)
    assert overall.loc["accel", "n_columns"] == 2
    assert overall.loc["arousal", "mean_abs_coef"] == pytest.approx(0.3)


def test_family_report_degenerate_statistics():
    families = {"accel__a": "entropy"}
    folds = [model([0.4], columns=["accel__a"], families=families), model([-0.4], columns=["accel__a"], families=families)]
    row = coefficient_family_report(folds).iloc[0]
    assert row["mean_abs_coef"] == pytest.approx(0.4)
    assert row["std_abs_coef"] == 0.0
    assert row["n_folds"] == 2


def test_family_report_lists_excluded_families(small_catalog):
    report = coefficient_family_report([model([0.1], columns=["accel__a"], families={"accel__a": "summary"})], small_catalog)
    statuses = dict(zip(report["family"], report["status"]))
    assert statuses["summary"] == "ok"
    assert statuses["spectral"] == "excluded"
    assert report["family"].iloc[-1] == "all"


def test_planted_entropy_signal_dominates():
    rng = np.random.default_rng(5)
    columns = ["accel__e1", "accel__e2", "accel__s1", "accel__s2", "accel__s3", "accel__s4"]
    families = {c: "entropy" if "__e" in c else "summary" for c in columns}
    folds = []
    for _ in range(2):
        X = rng.standard_normal((200, 6))
        y = (X[:, 0] + X[:, 1] + 0.3 * rng.standard_normal(200) > 0).astype(int)
        folds.append(fit_lasso_logit(X, y, columns=columns, families=families, task="early_warning"))
    report = coefficient_family_report(folds).set_index("family")
    assert report.loc["entropy", "mean_abs_coef"] > report.loc["summary", "mean_abs_coef"]
