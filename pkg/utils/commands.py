"""
Stage implementations behind the CLI subcommands.

Every stage reads its inputs, writes into a fresh output directory and
finishes with a run manifest. `args` is the argparse namespace built by main.py.
"""
import logging
import os

import pandas as pd

from config.config import Config
from data_model.errors import ValidationError
from data_model.ingest import ingest_cohort, load_manifest
from data_model.types import Task
from evaluation.pipelines import build_report, run_cnn_experiment, run_lr_experiment
from evaluation.sweeps import window_sweep
from features.catalog import FeatureCatalog
from features.extraction import extract_all, load_features, write_features
from linear_model.lasso_logit import save_model
from neural.training import TrainConfig
from preprocess.estimators import load_estimator
from preprocess.pipeline import preprocess_cohort, write_preprocessed
from synth.generator import SynthConfig, generate_cohort
from synth.sweep import effect_sweep
from utils.file_operations import jsonable, load_json, prepare_output_dir, save_json, write_frame
from utils.manifest import RunManifest, verify_upstream
from utils.results_utils import render_reports
from windowing.segments import WindowSpec, segment_cohort
from windowing.storage import load_windows, write_windows

logger = logging.getLogger(__name__)

PREDICTIONS_FILE = "predictions.csv"
TRAIN_SUMMARY_FILE = "train_summary.json"


def _seed(args):
    return Config.ROOT_SEED if getattr(args, "seed", None) is None else args.seed


def _threads(args):
    return getattr(args, "threads", None) or Config.THREADS


def _modalities(args):
    modalities = tuple(m.strip() for m in (getattr(args, "modalities", None) or "arousal,accel").split(",") if m.strip())
    unknown = set(modalities) - {"arousal", "accel"}
    if not modalities or unknown:
        raise ValidationError(f"--modalities takes a comma list of arousal and accel, got '{args.modalities}'")
    return modalities


def _parse_task(name):
    return Task.from_cli(name.strip())


def _task(args):
    return _parse_task(args.task)


def _start(args, command, config=None):
    out_dir = prepare_output_dir(args.out, force=getattr(args, "force", False))
    manifest = RunManifest(command, config=jsonable(config or {}), seeds={"root": _seed(args)})
    return out_dir, manifest


def run_synth(args):
    config = SynthConfig.from_file(args.config)
    if args.seed is not None:
        config = SynthConfig.from_dict({**config.to_dict(), "seed": args.seed})
    out_dir, manifest = _start(args, "synth", config.to_dict())
    manifest.seeds = {"root": config.seed}
    manifest.add_input("config", args.config or Config.SYNTH_DESK_PATH)
    generate_cohort(config, out_dir, threads=_threads(args))
    manifest.finish(out_dir)
    return out_dir


def _cohort_source(path):
    """(cohort root, manifest path) for a cohort directory or a manifest file inside one."""
    if os.path.isfile(path):
        return os.path.dirname(os.path.abspath(path)), path
    return path, None


def run_preprocess(args):
    root, manifest_path = _cohort_source(args.input)
    verify_upstream(root)
    estimator_path = args.estimator or Config.SURROGATE_AROUSAL_PATH
    out_dir, manifest = _start(args, "preprocess", {"estimator": estimator_path, "arousal_window_s": Config.AROUSAL_WINDOW_S})
    manifest.add_input("cohort", root)
    manifest.add_input("estimator", estimator_path)

    cohort = ingest_cohort(root, manifest_path)
    derived, stats = preprocess_cohort(cohort, load_estimator(estimator_path), threads=_threads(args))
    write_preprocessed(derived, load_manifest(root, manifest_path), root, out_dir, stats)
    manifest.finish(out_dir)
    return out_dir


def run_window(args):
    verify_upstream(args.input, "preprocess")
    constructor = WindowSpec.cnn if args.pipeline == "cnn" else WindowSpec.feature
    spec = constructor(length_s=args.length, step_s=args.step)
    out_dir, manifest = _start(args, "window", {**spec.to_dict(), "normalization": args.normalization})
    manifest.add_input("preprocessed", args.input)

    windows = segment_cohort(ingest_cohort(args.input), spec, args.normalization)
    if not windows:
        raise ValidationError(f"No windows of {spec.length_s:g} s survive segmentation")
    write_windows(windows, out_dir, spec, args.normalization)
    manifest.finish(out_dir)
    return out_dir


def run_featurize(args):
    verify_upstream(args.input, "window")
    catalog = FeatureCatalog.from_file(args.catalog)
    out_dir, manifest = _start(args, "featurize", catalog.to_dict())
    manifest.add_input("windows", args.input)
    manifest.add_input("catalog", args.catalog or Config.FEATURE_CATALOG_PATH)

    windows, _, _ = load_windows(args.input)
    vectors = extract_all(windows, catalog, threads=_threads(args))
    write_features(vectors, out_dir, catalog)
    manifest.finish(out_dir)
    return out_dir


def _aligned_vectors(windows, feature_dir):
    by_key = {}
    for vector in load_features(feature_dir):
        by_key[next(iter(vector.values())).window_key] = vector
    missing = [w.key for w in windows if w.key not in by_key]
    if missing:
        raise ValidationError(f"Features in '{feature_dir}' lack {len(missing)} windows, e.g. {missing[0]}")
    return [by_key[w.key] for w in windows]


def _write_training_outputs(out_dir, result, task, model, windows, spec, extra):
    write_frame(result.predictions, os.path.join(out_dir, PREDICTIONS_FILE))
    save_json(os.path.join(out_dir, "loso_plan.json"), result.plan.to_dict())
    summary = {"task": str(task), "model": model, "window": spec.to_dict(), "n_windows": len(windows), **extra}
    save_json(os.path.join(out_dir, TRAIN_SUMMARY_FILE), jsonable(summary))


def run_train_lr(args):
    verify_upstream(args.input, "window")
    task = _task(args)
    catalog = FeatureCatalog.from_file(args.catalog)
    modalities = _modalities(args)
    lam = "auto" if args.lam in (None, "auto") else float(args.lam)
    config = {
        "task": str(task), "modalities": list(modalities), "impute": args.impute, "lam": lam,
        "folds": args.folds, "catalog": catalog.digest,
    }
    out_dir, manifest = _start(args, "train-lr", config)
    manifest.add_input("windows", args.input)

    windows, spec, _ = load_windows(args.input)
    vectors = None
    if args.features:
        verify_upstream(args.features, "featurize")
        manifest.add_input("features", args.features)
        vectors = _aligned_vectors(windows, args.features)

    result = run_lr_experiment(
        windows, task, catalog=catalog, vectors=vectors, seed=_seed(args), modalities=modalities,
        impute=args.impute, lam=lam, threads=_threads(args),
    )
    for model, fold in zip(result.models, result.plan):
        save_model(model, os.path.join(out_dir, "models", f"fold_{fold.held_out}.json"))
    save_json(os.path.join(out_dir, "design_matrices.json"), jsonable(result.designs))
    write_frame(result.coefficients, os.path.join(out_dir, "coefficients.csv"))
    _write_training_outputs(out_dir, result, task, "lr", windows, spec, {"modalities": list(modalities)})
    manifest.finish(out_dir)
    return out_dir


def run_train_cnn(args):
    verify_upstream(args.input, "window")
    task = _task(args)
    config = TrainConfig.from_file(args.config, max_epochs=args.epochs, seed=_seed(args))
    if args.modalities:
        config.towers = _modalities(args)
    out_dir, manifest = _start(args, "train-cnn", {"task": str(task), "group": args.group, **config.to_dict()})
    manifest.add_input("windows", args.input)
    manifest.add_input("train_config", args.config or Config.TRAIN_CONFIG_PATH)

    windows, spec, _ = load_windows(args.input)
    result = run_cnn_experiment(
        windows, task, config, seed=_seed(args), group=args.group, checkpoint_dir=os.path.join(out_dir, "checkpoints")
    )
    save_json(os.path.join(out_dir, "histories.json"), jsonable(result.histories))
    extra = {"towers": list(config.towers)}
    if task == Task.PHASE_CATEGORICAL:
        extra["group"] = args.group or "treatment"
    _write_training_outputs(out_dir, result, task, "cnn", windows, spec, extra)
    manifest.finish(out_dir)
    return out_dir


def run_evaluate(args):
    upstream = verify_upstream(args.input)
    summary = load_json(os.path.join(args.input, TRAIN_SUMMARY_FILE))
    if summary is None:
        raise ValidationError(f"'{args.input}' holds no {TRAIN_SUMMARY_FILE}; run train-lr or train-cnn first")
    if upstream is not None and upstream.command not in ("train-lr", "train-cnn"):
        raise ValidationError(f"'{args.input}' was produced by '{upstream.command}', not a training stage")
    if args.model and args.model != summary["model"]:
        raise ValidationError(f"'{args.input}' holds a {summary['model']} run, not {args.model}")
    if args.task and _parse_task(args.task) != Task(summary["task"]):
        raise ValidationError(f"'{args.input}' was trained for {summary['task']}, not {_parse_task(args.task)}")
    out_dir, manifest = _start(args, "evaluate", {"scope": args.scope, **summary})
    manifest.add_input("training", args.input)

    predictions = pd.read_csv(os.path.join(args.input, PREDICTIONS_FILE), dtype={"participant": str, "group": str})
    report, smoothed = build_report(predictions, summary["task"], args.scope, summary["window"], summary["model"])
    for key in ("group", "modalities", "towers"):
        if key in summary:
            report.extra[key] = summary[key]
    report.write(out_dir, "report")
    if smoothed is not None:
        write_frame(smoothed, os.path.join(out_dir, "smoothed_predictions.csv"))
    manifest.finish(out_dir)
    return out_dir


def _float_list(text, name):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"--{name} takes a comma list of numbers, got '{text}'")


def run_sweep(args):
    catalog = FeatureCatalog.from_file(args.catalog)
    if args.kind == "window":
        if not args.input:
            raise ValidationError("A window sweep needs --input with a preprocessed cohort")
        verify_upstream(args.input, "preprocess")
        lengths = _float_list(args.lengths, "lengths") if args.lengths else list(Config.SWEEP_LENGTHS_S)
        tasks = [_parse_task(t) for t in args.tasks.split(",")]
        out_dir, manifest = _start(args, "sweep", {"kind": "window", "lengths": lengths, "tasks": [str(t) for t in tasks]})
        manifest.add_input("preprocessed", args.input)
        table = window_sweep(
            ingest_cohort(args.input), catalog, tasks=tasks, lengths=lengths, seed=_seed(args),
            threads=_threads(args), normalization=args.normalization, modalities=_modalities(args),
        )
        write_frame(table, os.path.join(out_dir, "sweep.csv"))
    elif args.kind == "effect":
        config = SynthConfig.from_file(args.config)
        scales = _float_list(args.scales, "scales")
        estimator_path = args.estimator or Config.SURROGATE_AROUSAL_PATH
        out_dir, manifest = _start(args, "sweep", {"kind": "effect", "scales": scales, "synth": config.to_dict()})
        manifest.add_input("config", args.config or Config.SYNTH_DESK_PATH)
        table = effect_sweep(
            config, scales, os.path.join(out_dir, "cohorts"), catalog, load_estimator(estimator_path),
            task=_parse_task(args.tasks.split(",")[0]), seed=_seed(args), threads=_threads(args),
        )
        write_frame(table, os.path.join(out_dir, "effect_sweep.csv"))
    else:
        raise ValidationError(f"Unknown sweep kind '{args.kind}'")
    manifest.finish(out_dir)
    return out_dir


def run_report(args):
    if not args.inputs:
        raise ValidationError("report needs at least one --inputs directory or file")
    out_dir, manifest = _start(args, "report")
    for index, path in enumerate(args.inputs):
        manifest.add_input(f"input_{index}", path)
    text = render_reports(args.inputs, out_dir)
    manifest.finish(out_dir)
    print(text)
    return out_dir


COMMANDS = {
    "synth": run_synth,
    "preprocess": run_preprocess,
    "window": run_window,
    "featurize": run_featurize,
    "train-lr": run_train_lr,
    "train-cnn": run_train_cnn,
    "evaluate": run_evaluate,
    "sweep": run_sweep,
    "report": run_report,
}
