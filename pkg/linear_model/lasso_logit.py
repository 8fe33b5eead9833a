"""
L1-regularized logistic regression with class-balanced sample weights.

Objective (bias unpenalized):

    F(w, b) = (1/N) * sum_i s_i * log(1 + exp(-y~_i * (x_i . w + b))) + lam * ||w||_1

where s_i is the class weight of sample i. Solved by cyclic coordinate descent
on the quadratic majorizer of the logistic loss (curvature bounded by 1/4), with
soft-thresholding and an active-set inner loop.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit, logit

from config.config import Config
from data_model.errors import ConvergenceWarning, ValidationError
from utils.file_operations import hash_payload, load_json, save_json

logger = logging.getLogger(__name__)


@dataclass
class LassoLogitModel:
    weights: np.ndarray
    bias: float
    lam: float
    class_weights: dict
    columns: list = field(default_factory=list)
    families: dict = field(default_factory=dict)
    task: str = ""
    seed: int = 0
    n_sweeps: int = 0
    converged: bool = False
    kkt: float = np.nan
    objective_history: list = field(default_factory=list)

    @property
    def column_metadata_hash(self):
        return hash_payload(list(self.columns))

    def to_dict(self):
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "lambda": float(self.lam),
            "class_weights": {str(k): float(v) for k, v in self.class_weights.items()},
            "column_metadata_hash": self.column_metadata_hash,
            "columns": list(self.columns),
            "families": dict(self.families),
            "task": self.task,
            "seed": int(self.seed),
            "n_sweeps": int(self.n_sweeps),
            "converged": bool(self.converged),
            "kkt_residual": float(self.kkt),
        }

    @classmethod
    def from_dict(cls, data):
        model = cls(
            weights=np.asarray(data["weights"], dtype=float),
            bias=float(data["bias"]),
            lam=float(data["lambda"]),
            class_weights={int(k): float(v) for k, v in data["class_weights"].items()},
            columns=list(data.get("columns", [])),
            families=dict(data.get("families", {})),
            task=data.get("task", ""),
            seed=int(data.get("seed", 0)),
            n_sweeps=int(data.get("n_sweeps", 0)),
            converged=bool(data.get("converged", False)),
            kkt=float(data.get("kkt_residual", np.nan)),
        )
        if model.columns and data.get("column_metadata_hash") not in (None, model.column_metadata_hash):
            raise ValidationError("Model file column hash does not match its column list")
        return model


def save_model(model, path):
    save_json(path, model.to_dict())


def load_model(path):
    data = load_json(path)
    if data is None:
        raise ValidationError(f"Model file '{path}' not found")
    return LassoLogitModel.from_dict(data)


def balanced_class_weights(y):
    """Class weight N / (2 * N_c) for c in {0, 1}."""
    y = np.asarray(y)
    n = y.size
    return {c: n / (2.0 * np.sum(y == c)) for c in (0, 1)}


def _check_inputs(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValidationError(f"Shape mismatch: X {X.shape}, y {y.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("Design matrix contains non-finite entries")
    if not np.all(np.isin(y, (0, 1))):
        raise ValidationError("Labels must be binary 0/1")
    if np.unique(y).size < 2:
        raise ValidationError("Training labels contain a single class")
    return X, y.astype(float)


def sample_weights(y, class_weights):
    if class_weights is None:
        class_weights = balanced_class_weights(y)
    class_weights = {int(k): float(v) for k, v in class_weights.items()}
    if any(v <= 0 for v in class_weights.values()):
        raise ValidationError("Class weights must be positive")
    return np.where(y == 1, class_weights[1], class_weights[0]), class_weights


def _loss(margin, y, s):
    # log(1 + exp(-m)) for y=1 and log(1 + exp(m)) for y=0
    signed = np.where(y == 1, margin, -margin)
    return -np.mean(s * log_expit(signed))


def objective(X, y, s, weights, bias, lam):
    return _loss(X @ weights + bias, y, s) + lam * np.sum(np.abs(weights))


def _gradient(X, y, s, margin):
    residual = s * (expit(margin) - y) / y.size
    return X.T @ residual, float(residual.sum())


def kkt_residual(X, y, s, weights, bias, lam):
    """Largest violation of the lasso optimality conditions (including the bias)."""
    grad_w, grad_b = _gradient(X, y, s, X @ weights + bias)
    zero = weights == 0
    violation = np.where(
        zero,
        np.maximum(np.abs(grad_w) - lam, 0.0),
        np.abs(grad_w + lam * np.sign(weights)),
    )
    return float(max(violation.max(initial=0.0), abs(grad_b)))


def lambda_max(X, y, class_weights=None):
    """Smallest lambda for which every weight is zero at the optimum."""
    X, y = _check_inputs(X, y)
    s, _ = sample_weights(y, class_weights)
    prevalence = np.sum(s * y) / np.sum(s)
    grad_w, _ = _gradient(X, y, s, np.full(y.size, logit(prevalence)))
    return float(np.max(np.abs(grad_w)))


def soft_threshold(x, t):
    return np.sign(x) * max(abs(x) - t, 0.0)


def _sweep(X, y, s, weights, bias, margin, lam, curvature, bias_curvature, coordinates):
    """One cyclic pass over `coordinates` and the bias; updates weights/margin in place."""
    for j in coordinates:
        if curvature[j] == 0:
            continue
        column = X[:, j]
        grad = np.dot(s * (expit(margin) - y), column) / y.size
        new = soft_threshold(weights[j] - grad / curvature[j], lam / curvature[j])
        delta = new - weights[j]
        if delta != 0:
            weights[j] = new
            margin += delta * column
    grad_b = np.sum(s * (expit(margin) - y)) / y.size
    step = grad_b / bias_curvature
    margin -= step
    return bias - step


def fit_lasso_logit(X, y, lam="auto", class_weights=None, tol=None, max_sweeps=None, seed=None, columns=None, families=None, task=""):
    """
    Fit the class-weighted L1 logistic regression.

    Parameters:
        X (ndarray): standardized design matrix (N x p).
        y (ndarray): binary labels.
        lam (float or "auto"): L1 strength; "auto" uses Config.LAMBDA_RATIO * lambda_max.
        class_weights (dict, optional): {0: w0, 1: w1}; balanced weights when None.

    Returns:
        LassoLogitModel: converged is False when max_sweeps was reached first.
    """
    X, y = _check_inputs(X, y)
    s, class_weights = sample_weights(y, class_weights)
    tol = Config.LASSO_TOLERANCE if tol is None else tol
    max_sweeps = Config.LASSO_MAX_SWEEPS if max_sweeps is None else max_sweeps
    if lam == "auto":
        lam = Config.LAMBDA_RATIO * lambda_max(X, y, class_weights)
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValidationError(f"lambda must be a non-negative number, got {lam}")

    X = np.asfortranarray(X)
    n, p = X.shape
    curvature = (s @ (X ** 2)) / (4.0 * n)
    bias_curvature = s.sum() / (4.0 * n)

    weights = np.zeros(p)
    prevalence = np.sum(s * y) / np.sum(s)
    bias = float(logit(prevalence))
    margin = np.full(n, bias)
    history = [objective(X, y, s, weights, bias, lam)]

    def record():
        value = _loss(margin, y, s) + lam * np.sum(np.abs(weights))
        assert value <= history[-1] + 1e-10 * max(1.0, abs(history[-1])), "objective increased during a sweep"
        history.append(value)

    all_coordinates = np.arange(p)
    sweeps = 0
    converged = False
    kkt = np.inf
    while sweeps < max_sweeps:
        bias = _sweep(X, y, s, weights, bias, margin, lam, curvature, bias_curvature, all_coordinates)
        sweeps += 1
        record()
        kkt = kkt_residual(X, y, s, weights, bias, lam)
        if kkt <= tol:
            converged = True
            break

        active = np.flatnonzero(weights)
        while sweeps < max_sweeps:
            bias = _sweep(X, y, s, weights, bias, margin, lam, curvature, bias_curvature, active)
            sweeps += 1
            record()
            grad_w, grad_b = _gradient(X[:, active], y, s, margin)
            active_kkt = np.abs(grad_w + lam * np.sign(weights[active])).max(initial=0.0)
            if max(active_kkt, abs(grad_b)) <= tol:
                break

    if not converged:
        message = f"Coordinate descent stopped after {sweeps} sweeps with KKT residual {kkt:.3g} > {tol:g}"
        logger.warning(message)
        warnings.warn(message, ConvergenceWarning, stacklevel=2)

    return LassoLogitModel(
        weights=weights,
        bias=bias,
        lam=lam,
        class_weights=class_weights,
        columns=list(columns) if columns is not None else [],
        families=dict(families or {}),
        task=str(task),
        seed=Config.ROOT_SEED if seed is None else int(seed),
        n_sweeps=sweeps,
        converged=converged,
        kkt=kkt,
        objective_history=history,
    )


def predict_proba(model, X, columns=None):
    """logistic(X . w + b) per row."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.weights.size:
        raise ValidationError(f"Design matrix has {X.shape[-1]} columns, model expects {model.weights.size}")
    if columns is not None and model.columns and list(columns) != list(model.columns):
        raise ValidationError("Design matrix columns do not match the model's training columns")
    return expit(X @ model.weights + model.bias)
