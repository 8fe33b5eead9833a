from .coefficients import coefficient_family_report
from .lasso_logit import (
    LassoLogitModel,
    balanced_class_weights,
    fit_lasso_logit,
    kkt_residual,
    lambda_max,
    load_model,
    predict_proba,
    sample_weights,
    save_model,
)
