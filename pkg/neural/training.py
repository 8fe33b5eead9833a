"""
Mini-batch training loop for the two-tower CNN.
"""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, softmax

from config.config import Config
from data_model.errors import ValidationError
from data_model.types import Task
from evaluation.metrics import auroc, multiclass_auroc
from neural.losses import LOSSES
from neural.model import TwoTowerCnn
from neural.optim import AdamW, EarlyStopping, ReduceLROnPlateau
from utils.file_operations import load_json
from utils.system import ShutdownSignal

logger = logging.getLogger(__name__)


def head_for_task(task):
    task = Task(task)
    if task.is_binary:
        return "binary"
    return "categorical" if task == Task.PHASE_CATEGORICAL else "regression"


@dataclass
class TrainConfig:
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 1e-2
    batch_size: int = 64
    scheduler_factor: float = 0.5
    scheduler_patience: int = 3
    early_stopping_patience: int = 10
    max_epochs: int = 100
    dropout: float = 0.3
    hidden: int = 64
    dtype: str = "float32"
    towers: tuple = ("arousal", "accel")
    seed: int = 0

    def __post_init__(self):
        self.betas = tuple(self.betas)
        self.towers = tuple(self.towers)
        if self.batch_size < 2:
            raise ValidationError("batch_size must be at least 2")
        if self.lr < 0 or self.max_epochs < 1:
            raise ValidationError("lr must be non-negative and max_epochs positive")

    @classmethod
    def from_dict(cls, data=None, **overrides):
        values = dict(Config.TRAIN_DEFAULTS)
        values.update(data or {})
        values.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"Unknown training options: {', '.join(sorted(unknown))}")
        values.setdefault("seed", Config.ROOT_SEED)
        return cls(**values)

    @classmethod
    def from_file(cls, path=None, **overrides):
        path = path or Config.TRAIN_CONFIG_PATH
        data = load_json(path)
        if data is None:
            raise ValidationError(f"Training config '{path}' not found")
        return cls.from_dict(data, **overrides)

    def to_dict(self):
        data = asdict(self)
        data["betas"] = list(self.betas)
        data["towers"] = list(self.towers)
        return data


@dataclass
class ModalityScaler:
    """Per-modality z-score with statistics from the training windows."""
    means: dict = field(default_factory=dict)
    stds: dict = field(default_factory=dict)

    @classmethod
    def fit(cls, windows, modalities):
        scaler = cls()
        for modality in modalities:
            values = np.concatenate([np.asarray(w.grid(modality), dtype=float) for w in windows])
            std = float(values.std())
            scaler.means[modality] = float(values.mean())
            scaler.stds[modality] = std if std > 0 else 1.0
        return scaler

    def transform(self, windows, modality, dtype):
        grids = np.stack([np.asarray(w.grid(modality), dtype=float) for w in windows])
        return ((grids - self.means[modality]) / self.stds[modality]).astype(dtype)[:, None, :]

    def to_dict(self):
        return {"means": self.means, "stds": self.stds}

    @classmethod
    def from_dict(cls, data):
        return cls(dict(data["means"]), dict(data["stds"]))


def encode_targets(windows, task):
    task = Task(task)
    values = np.array([w.label(task) for w in windows], dtype=float)
    head = head_for_task(task)
    if head == "categorical":
        return values.astype(int) - 1
    return values


def class_weights_for(targets, head):
    if head == "binary":
        n = targets.size
        counts = {c: np.sum(targets == c) for c in (0, 1)}
        return {c: n / (2.0 * counts[c]) if counts[c] else 0.0 for c in (0, 1)}
    if head == "categorical":
        counts = np.bincount(targets, minlength=3)
        return np.where(counts > 0, targets.size / (3.0 * np.maximum(counts, 1)), 0.0)
    return None


@dataclass
class TrainResult:
    model: TwoTowerCnn
    scaler: ModalityScaler
    history: list
    best_epoch: int
    best_metric: float
    metric_name: str
    interrupted: bool = False


def _inputs(windows, scaler, towers, dtype):
    return {modality: scaler.transform(windows, modality, dtype) for modality in towers}


def _batch(inputs, index):
    return {name: values[index] for name, values in inputs.items()}


def predict_outputs(model, inputs, batch_size=256):
    """Head outputs in eval mode: probabilities (binary), class probabilities, or BAC estimates."""
    n = next(iter(inputs.values())).shape[0]
    logits = [model.forward(_batch(inputs, slice(i, i + batch_size)), training=False) for i in range(0, n, batch_size)]
    logits = np.concatenate(logits, axis=0).astype(np.float64) if logits else np.empty((0, model.n_outputs))
    if model.head_kind == "binary":
        return expit(logits[:, 0])
    if model.head_kind == "categorical":
        return softmax(logits, axis=1)
    return logits[:, 0]


def predict(model, windows, scaler):
    """Predictions for windows with the training scaler; deterministic (eval mode)."""
    if not windows:
        return np.empty(0)
    return predict_outputs(model, _inputs(windows, scaler, model.towers, model.dtype))


def _validation_metric(head, targets, outputs, loss):
    if head == "binary":
        if np.unique(targets).size < 2:
            return None
        return auroc(outputs, targets)
    if head == "categorical":
        if np.unique(targets).size < 2:
            return None
        return multiclass_auroc(outputs, targets + 1, classes=(1, 2, 3))
    return -float(np.mean(np.abs(outputs - targets)))


def train(model, train_windows, val_windows, config, task):
    """
    Train with AdamW, a plateau scheduler and early stopping on the validation metric.

    The validation metric is AUROC (binary), macro one-vs-rest AUROC (categorical)
    or negative MAE (regression); a single-class validation set falls back to the
    negative validation loss. The model is left holding the best epoch's weights.
    """
    if not train_windows or not val_windows:
        raise ValidationError("Training and validation windows must be non-empty")
    overlap = {w.participant_id for w in train_windows} & {w.participant_id for w in val_windows}
    if overlap:
        raise ValidationError(f"Participants in both training and validation sets: {sorted(overlap)}")
    head = head_for_task(task)
    if head != model.head_kind:
        raise ValidationError(f"Model head '{model.head_kind}' does not fit task '{task}'")

    scaler = ModalityScaler.fit(train_windows, model.towers)
    train_inputs = _inputs(train_windows, scaler, model.towers, model.dtype)
    val_inputs = _inputs(val_windows, scaler, model.towers, model.dtype)
    train_targets = encode_targets(train_windows, task)
    val_targets = encode_targets(val_windows, task)
    weights = class_weights_for(train_targets, head)
    loss_fn = LOSSES[head]

    def loss_of(outputs_or_logits, targets):
        if head == "regression":
            return loss_fn(outputs_or_logits, targets)
        return loss_fn(outputs_or_logits, targets, weights)

    optimizer = AdamW(
        [tensor for _, tensor in model.parameters()],
        lr=config.lr, betas=config.betas, eps=config.eps, weight_decay=config.weight_decay,
    )
    scheduler = ReduceLROnPlateau(optimizer, mode="max", factor=config.scheduler_factor, patience=config.scheduler_patience)
    stopper = EarlyStopping(patience=config.early_stopping_patience, mode="max")
    rng = np.random.default_rng(config.seed)

    n = train_targets.size
    history = []
    best_state, best_epoch, best_metric = model.state_dict(), 0, -np.inf
    metric_name = {"binary": "auroc", "categorical": "macro_auroc", "regression": "neg_mae"}[head]
    warned_single_class = False
    interrupted = False

    for epoch in range(1, config.max_epochs + 1):
        if ShutdownSignal.flag:
            logger.warning("Shutdown requested; stopping training before epoch %d", epoch)
            interrupted = True
            break

        order = rng.permutation(n)
        batches = [order[i:i + config.batch_size] for i in range(0, n, config.batch_size)]
        if len(batches) > 1 and batches[-1].size < 2:
            batches[-2] = np.concatenate([batches[-2], batches.pop()])
        losses = []
        for index in batches:
            if index.size < 2:
                continue
            logits = model.forward(_batch(train_inputs, index), training=True)
            targets = train_targets[index]
            loss, grad = loss_of(logits if head == "categorical" else logits[:, 0], targets)
            optimizer.zero_grad()
            model.backward(grad)
            optimizer.step()
            losses.append(loss * index.size)
        train_loss = float(np.sum(losses) / n)

        val_logits = np.concatenate(
            [model.forward(_batch(val_inputs, slice(i, i + 256)), training=False) for i in range(0, val_targets.size, 256)]
        ).astype(np.float64)
        val_loss, _ = loss_of(val_logits if head == "categorical" else val_logits[:, 0], val_targets)
        if head == "binary":
            val_outputs = expit(val_logits[:, 0])
        elif head == "categorical":
            val_outputs = softmax(val_logits, axis=1)
        else:
            val_outputs = val_logits[:, 0]
        metric = _validation_metric(head, val_targets, val_outputs, val_loss)
        if metric is None:
            if not warned_single_class:
                logger.warning("Validation set holds a single class; monitoring validation loss instead")
                warned_single_class = True
            metric = -val_loss

        scheduler.step(metric)
        stopper.step(metric)
        history.append({
            "epoch": epoch,
            "train_loss": train_loss,
            "val_loss": float(val_loss),
            "val_metric": float(metric),
            "lr": float(optimizer.lr),
        })
        logger.debug("Epoch %d: train %.4f, val %.4f, %s %.4f", epoch, train_loss, val_loss, metric_name, metric)
        if stopper.improved:
            best_state, best_epoch, best_metric = model.state_dict(), epoch, float(metric)
        if stopper.should_stop:
            logger.info("Early stopping after epoch %d (best epoch %d)", epoch, best_epoch)
            break

    model.load_state_dict(best_state)
    return TrainResult(model, scaler, history, best_epoch, best_metric, metric_name, interrupted)
