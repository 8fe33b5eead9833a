import logging
import os
from dataclasses import replace

import numpy as np
import pandas as pd

from config.config import Config
from data_model.errors import ValidationError
from data_model.ingest import ingest_cohort
from evaluation.pipelines import run_lr_experiment
from evaluation.sweeps import SWEEP_COLUMNS, summary_row
from preprocess.pipeline import preprocess_cohort
from synth.generator import generate_cohort
from windowing.segments import WindowSpec, segment_cohort

logger = logging.getLogger(__name__)

EFFECT_SWEEP_COLUMNS = ["effect_scale"] + [c for c in SWEEP_COLUMNS if c != "step_s"]
MONOTONE_TOLERANCE = 0.02


def effect_sweep(config, scales, work_dir, catalog, estimator, task="early_warning", seed=None, threads=None,
                 length_s=None):
    """
    Generate one cohort per effect scale and run the full feature pipeline on it.

    Parameters:
        config (SynthConfig): base cohort; its effect is multiplied by each scale.
        scales (iterable of float): at least two scales, one of them 0.
        work_dir (str): cohorts are written to `<work_dir>/effect_<scale>`.
        catalog (FeatureCatalog), estimator (ArousalEstimator): pipeline inputs.

    Returns:
        DataFrame with one row per scale in EFFECT_SWEEP_COLUMNS order.
    """
    scales = sorted(float(s) for s in scales)
    if len(scales) < 2 or 0.0 not in scales:
        raise ValidationError("An effect sweep needs at least two scales including 0")
    seed = Config.ROOT_SEED if seed is None else seed
    spec = WindowSpec.feature(length_s=length_s)

    rows = []
    for scale in scales:
        cohort_dir = os.path.join(work_dir, f"effect_{scale:g}")
        generate_cohort(replace(config, effect=config.effect.scaled(scale)), cohort_dir, threads=threads)
        derived, _ = preprocess_cohort(ingest_cohort(cohort_dir), estimator, threads=threads)
        windows = segment_cohort(derived, spec)
        result = run_lr_experiment(windows, task, catalog=catalog, seed=seed, threads=threads)
        rows.append(summary_row(result.report, effect_scale=scale, task=str(task), length_s=spec.length_s, n_windows=len(windows)))
        logger.info("Effect scale %g: pooled AUROC %.3f", scale, rows[-1]["pooled_all_auroc"])

    table = pd.DataFrame(rows, columns=EFFECT_SWEEP_COLUMNS)
    running_max = np.fmax.accumulate(table["pooled_all_auroc"].to_numpy(dtype=float))
    dips = table["pooled_all_auroc"].to_numpy(dtype=float) < running_max - MONOTONE_TOLERANCE
    if dips.any():
        logger.warning(
            "Pooled AUROC is not monotone in effect scale at %s",
            ", ".join(f"{s:g}" for s in table.loc[dips, "effect_scale"]),
        )
    return table
