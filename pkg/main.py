import argparse
import logging
import signal
import sys

from config.config import Config
from data_model.errors import ValidationError
from utils.commands import COMMANDS
from utils.logging_utils import setup_logging
from utils.system import handle_shutdown_signal

logger = logging.getLogger("impairdetect")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_FAILURE = 2


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ {self.prog}: {message}", file=sys.stderr)
        sys.exit(EXIT_VALIDATION)


def _common(parser, out=True):
    if out:
        parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--force", action="store_true", help="overwrite an existing output directory")
    parser.add_argument("--seed", type=int, default=None, help="root seed (default: IMPAIRDETECT_SEED)")
    parser.add_argument("--threads", type=int, default=None, help="worker processes (default: IMPAIRDETECT_THREADS)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-file", default=None)


def build_parser():
    parser = CliParser(prog="impairdetect", description="Smartwatch-based alcohol impairment detection pipeline.")
    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    subparsers.required = True

    synth = subparsers.add_parser("synth", help="generate a synthetic cohort")
    synth.add_argument("--config", default=None, help=f"synth config JSON (default: {Config.SYNTH_DESK_PATH})")
    _common(synth)

    preprocess = subparsers.add_parser("preprocess", help="clean, normalize and derive arousal/accel streams")
    preprocess.add_argument("--input", "--manifest", dest="input", required=True, help="cohort directory or its manifest.json")
    preprocess.add_argument("--estimator", "--arousal-model", dest="estimator", default=None, help="arousal estimator parameter file")
    _common(preprocess)

    window = subparsers.add_parser("window", help="segment a preprocessed cohort into labeled windows")
    window.add_argument("--input", required=True, help="preprocessed cohort directory")
    window.add_argument("--spec", "--pipeline", dest="pipeline", choices=("feature", "cnn"), default="feature", help="window spec family")
    window.add_argument("--length", type=float, default=None, help="window length in s")
    window.add_argument("--step", type=float, default=None, help="window step in s")
    window.add_argument("--normalization", choices=("standard", "per_phase"), default="standard")
    _common(window)

    featurize = subparsers.add_parser("featurize", help="extract catalog features per window")
    featurize.add_argument("--input", required=True, help="window directory")
    featurize.add_argument("--catalog", default=None, help="feature catalog JSON")
    _common(featurize)

    train_lr = subparsers.add_parser("train-lr", help="LOSO-train the LASSO-logistic model")
    train_lr.add_argument("--input", required=True, help="window directory")
    train_lr.add_argument("--features", default=None, help="featurize output for the same windows")
    train_lr.add_argument("--task", default="early_warning", help="early_warning|above_limit (or early|above)")
    train_lr.add_argument("--catalog", default=None)
    train_lr.add_argument("--modalities", default="arousal,accel")
    train_lr.add_argument("--impute", choices=("median", "drop"), default="median")
    train_lr.add_argument("--lambda", "--lam", dest="lam", default="auto", help="L1 strength or 'auto'")
    train_lr.add_argument("--folds", choices=("loso",), default="loso", help="cross-validation scheme")
    _common(train_lr)

    train_cnn = subparsers.add_parser("train-cnn", help="LOSO-train the two-tower CNN")
    train_cnn.add_argument("--input", required=True, help="window directory (cnn pipeline)")
    train_cnn.add_argument("--task", default="early_warning")
    train_cnn.add_argument("--config", default=None, help="training config JSON")
    train_cnn.add_argument("--epochs", type=int, default=None, help="override max_epochs")
    train_cnn.add_argument("--group", choices=("treatment", "control"), default=None, help="participants for the phase task")
    train_cnn.add_argument("--modalities", default=None, help="towers to build, e.g. 'accel' for a single tower")
    _common(train_cnn)

    evaluate = subparsers.add_parser("evaluate", help="aggregate held-out predictions into a report")
    evaluate.add_argument("--input", required=True, help="train-lr or train-cnn output directory")
    evaluate.add_argument("--model", choices=("lr", "cnn"), default=None, help="expected model of the training run")
    evaluate.add_argument("--task", default=None, help="expected task of the training run (early|above|phase|bac)")
    evaluate.add_argument("--scope", choices=("treatment", "all"), default="all")
    _common(evaluate)

    sweep = subparsers.add_parser("sweep", help="window-length or effect-size sweep")
    sweep.add_argument("--kind", choices=("window", "effect"), default="window")
    sweep.add_argument("--input", default=None, help="preprocessed cohort (window sweep)")
    sweep.add_argument("--config", default=None, help="synth config (effect sweep)")
    sweep.add_argument("--lengths", default=None, help="comma list of window lengths in s")
    sweep.add_argument("--scales", default="0,0.5,1,2", help="comma list of effect scales")
    sweep.add_argument("--tasks", default="early_warning,above_limit")
    sweep.add_argument("--catalog", default=None)
    sweep.add_argument("--estimator", default=None)
    sweep.add_argument("--modalities", default="arousal,accel")
    sweep.add_argument("--normalization", choices=("standard", "per_phase"), default="standard")
    _common(sweep)

    report = subparsers.add_parser("report", help="render consolidated result tables")
    report.add_argument("--inputs", nargs="+", required=True, help="evaluate/sweep directories or report files")
    _common(report)
    return parser


def main(argv=None):
    """
    Parse argv, run one stage and return the exit code:
    0 on success, 1 on validation or usage errors, 2 on any other failure.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_VALIDATION

    setup_logging(args.log_level, args.log_file)
    signal.signal(signal.SIGINT, handle_shutdown_signal)
    signal.signal(signal.SIGTERM, handle_shutdown_signal)

    print(f"▶️ impairdetect {args.command}")
    try:
        out_dir = COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"❌ {args.command}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception("Stage '%s' failed", args.command)
        print(f"❌ {args.command} failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"✅ {args.command} finished: {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
