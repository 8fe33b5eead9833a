"""
End-to-end LOSO experiments shared by the CLI stages and the sweeps.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from config.config import Config
from data_model.errors import ValidationError
from data_model.types import Group, Task
from evaluation.aggregate import PROBABILITY_COLUMNS, aggregate
from evaluation.loso import make_loso_plan
from evaluation.smoothing import cma_smooth
from features.design_matrix import assemble_design_matrix
from features.extraction import extract_all
from linear_model.coefficients import coefficient_family_report
from linear_model.lasso_logit import fit_lasso_logit, predict_proba
from neural.checkpoint import save_checkpoint
from neural.model import TwoTowerCnn
from neural.training import head_for_task, predict, train
from utils.system import ShutdownSignal

logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    task: str
    predictions: pd.DataFrame
    report: object
    plan: object
    models: list = field(default_factory=list)
    coefficients: pd.DataFrame = None
    smoothed: pd.DataFrame = None
    histories: dict = field(default_factory=dict)
    designs: list = field(default_factory=list)


def _participants(windows):
    return list(dict.fromkeys(w.participant_id for w in windows))


def fold_seeds(seed, count):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def select_group(windows, group):
    """Restrict windows to treatment or control (placebo + reference) participants."""
    if group in (None, "all"):
        return list(windows)
    if group == "treatment":
        return [w for w in windows if w.group == str(Group.TREATMENT)]
    if group == "control":
        return [w for w in windows if w.group != str(Group.TREATMENT)]
    raise ValidationError(f"Unknown group '{group}'")


def prediction_frame(windows, outputs, task):
    """One row per window: identification columns plus label/score, class probabilities, or BAC."""
    task = Task(task)
    frame = pd.DataFrame({
        "participant": [w.participant_id for w in windows],
        "group": [w.group for w in windows],
        "phase": [w.phase_index for w in windows],
        "phase_start_s": [w.phase_start_s for w in windows],
        "start_s": [w.start_s for w in windows],
    })
    labels = [w.label(task) for w in windows]
    if task.is_binary:
        frame["label"] = np.asarray(labels, dtype=int)
        frame["score"] = np.asarray(outputs, dtype=float)
    elif task == Task.PHASE_CATEGORICAL:
        frame["label"] = np.asarray(labels, dtype=int)
        outputs = np.asarray(outputs, dtype=float).reshape(len(windows), len(PROBABILITY_COLUMNS))
        for index, column in enumerate(PROBABILITY_COLUMNS):
            frame[column] = outputs[:, index]
    else:
        frame["reference"] = np.asarray(labels, dtype=float)
        frame["prediction"] = np.asarray(outputs, dtype=float)
    return frame


def build_report(predictions, task, scope, window, model, plan=None):
    """
    Aggregate predictions into an EvalReport; binary tasks also get the CMA
    smoothed scores and the AUROC-over-time curve.

    Returns (report, smoothed frame or None).
    """
    report = aggregate(predictions, task, scope)
    report.extra["model"] = model
    report.extra["window"] = dict(window)
    smoothed = None
    if Task(task).is_binary:
        smoothed, curve = cma_smooth(predictions, window["length_s"])
        report.curves["auroc_time"] = curve
        tail = curve.dropna(subset=["auroc"])
        report.extra["cma"] = {
            "bin_s": Config.CMA_BIN_S,
            "final_elapsed_s": float(tail["elapsed_s"].iloc[-1]) if not tail.empty else None,
            "final_auroc": float(tail["auroc"].iloc[-1]) if not tail.empty else None,
        }
    if plan is not None:
        report.extra["loso"] = {"n_folds": len(plan), "seed": plan.seed, "validation_size": plan.validation_size}
    return report, smoothed


def _finish(result, windows, scope, model):
    result.report, result.smoothed = build_report(
        result.predictions, result.task, scope, windows[0].spec.to_dict(), model, result.plan
    )
    return result


# Feature pipeline
def _lr_fold(job):
    held_out, train_vectors, train_labels, test_vectors, impute, modalities, lam, task, seed = job
    design = assemble_design_matrix(train_vectors, impute=impute, modalities=modalities)
    label_by_key = dict(zip([v[next(iter(v))].window_key for v in train_vectors], train_labels))
    y = np.array([label_by_key[key] for key in design.keys], dtype=int)
    model = fit_lasso_logit(design.X, y, lam=lam, columns=design.columns, families=design.families, task=task, seed=seed)
    X_test, test_keys = design.transform(test_vectors)
    scores = predict_proba(model, X_test, design.columns) if len(test_keys) else np.empty(0)
    logger.info("Fold %s: %d training windows, %d non-zero weights", held_out, design.X.shape[0], int(np.sum(model.weights != 0)))
    return held_out, model, test_keys, scores, design.metadata()


def run_lr_experiment(windows, task, catalog=None, vectors=None, seed=None, modalities=("arousal", "accel"),
                      impute="median", lam="auto", scope="all", threads=None):
    """
    LOSO evaluation of the LASSO-logistic pipeline on binary tasks.

    Each fold trains on every participant except the held-out one (the LOSO
    validation split is not needed here). Features are extracted once when not
    supplied.
    """
    task = Task(task)
    if not task.is_binary:
        raise ValidationError(f"The feature pipeline supports binary tasks only, not '{task}'")
    if not windows:
        raise ValidationError("No windows to evaluate")
    seed = Config.ROOT_SEED if seed is None else seed
    threads = threads or Config.THREADS
    if vectors is None:
        if catalog is None:
            raise ValidationError("Either feature vectors or a feature catalog is required")
        vectors = extract_all(windows, catalog, threads=threads)
    if len(vectors) != len(windows):
        raise ValidationError(f"{len(vectors)} feature vectors for {len(windows)} windows")

    participants = _participants(windows)
    plan = make_loso_plan(participants, seed)
    jobs = []
    for fold in plan:
        train_index = [i for i, w in enumerate(windows) if w.participant_id != fold.held_out]
        test_index = [i for i, w in enumerate(windows) if w.participant_id == fold.held_out]
        jobs.append((
            fold.held_out,
            [vectors[i] for i in train_index],
            [windows[i].label(task) for i in train_index],
            [vectors[i] for i in test_index],
            impute,
            tuple(modalities),
            lam,
            str(task),
            seed,
        ))

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            outcomes = list(executor.map(_lr_fold, jobs))
    else:
        outcomes = [_lr_fold(job) for job in jobs]

    by_key = {w.key: w for w in windows}
    kept, scores, models = [], [], []
    for _, model, test_keys, fold_scores, _ in outcomes:
        models.append(model)
        kept.extend(by_key[key] for key in test_keys)
        scores.extend(fold_scores)
    predictions = prediction_frame(kept, scores, task)

    result = ExperimentResult(str(task), predictions, None, plan, models)
    result.coefficients = coefficient_family_report(models, catalog, modalities)
    result.designs = [outcome[4] for outcome in outcomes]
    return _finish(result, windows, scope, "lr")


# Neural pipeline
def run_cnn_experiment(windows, task, config, seed=None, scope="all", group=None, checkpoint_dir=None, held_out=None):
    """
    LOSO evaluation of the two-tower CNN.

    Per fold the model trains on the training participants, early-stops on the
    validation participants and predicts the held-out participant. For the
    categorical phase task `group` selects treatment or control participants.
    `held_out` optionally restricts which folds run.
    """
    task = Task(task)
    seed = Config.ROOT_SEED if seed is None else seed
    if task == Task.PHASE_CATEGORICAL:
        windows = select_group(windows, group or "treatment")
    if not windows:
        raise ValidationError("No windows to evaluate")

    spec = windows[0].spec
    plan = make_loso_plan(_participants(windows), seed)
    seeds = fold_seeds(seed, len(plan))
    by_participant = {}
    for window in windows:
        by_participant.setdefault(window.participant_id, []).append(window)

    result = ExperimentResult(str(task), None, None, plan)
    predicted, outputs = [], []
    for fold, fold_seed in zip(plan, seeds):
        if held_out is not None and fold.held_out not in held_out:
            continue
        if ShutdownSignal.flag:
            logger.warning("Shutdown requested; skipping remaining folds")
            break
        train_windows = [w for p in fold.train for w in by_participant[p]]
        val_windows = [w for p in fold.validation for w in by_participant[p]]
        test_windows = by_participant[fold.held_out]
        model = TwoTowerCnn(
            head=head_for_task(task),
            towers=config.towers,
            input_lengths={"arousal": spec.arousal_size, "accel": spec.accel_size},
            hidden=config.hidden,
            dropout=config.dropout,
            seed=fold_seed,
            dtype=config.dtype,
        )
        fold_config = replace(config, seed=fold_seed)
        trained = train(model, train_windows, val_windows, fold_config, task)
        predicted.extend(test_windows)
        outputs.append(predict(trained.model, test_windows, trained.scaler))
        result.histories[fold.held_out] = trained.history
        if checkpoint_dir:
            save_checkpoint(
                os.path.join(checkpoint_dir, f"fold_{fold.held_out}"),
                trained.model,
                trained.scaler,
                fold_config,
                extra={"held_out": fold.held_out, "best_epoch": trained.best_epoch, "best_metric": trained.best_metric},
            )
        logger.info("Fold %s: best epoch %d, %s %.4f", fold.held_out, trained.best_epoch, trained.metric_name, trained.best_metric)

    if not predicted:
        raise ValidationError("No folds were evaluated")
    result.predictions = prediction_frame(predicted, np.concatenate(outputs, axis=0), task)
    result = _finish(result, windows, scope, "cnn")
    if task == Task.PHASE_CATEGORICAL:
        result.report.extra["group"] = group or "treatment"
    return result
