from .aggregate import EvalReport, aggregate
from .loso import LosoFold, LosoPlan, make_loso_plan
from .metrics import (
    auprc,
    auroc,
    delong_ci,
    delong_variance,
    multiclass_auprc,
    multiclass_auroc,
    pr_curve,
    prevalence,
    roc_curve,
)
from .regression import regression_eval
from .smoothing import cma_smooth, cumulative_moving_average
