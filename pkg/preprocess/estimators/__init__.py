from .base_estimator import ArousalEstimator
from .logistic_surrogate import LogisticSurrogateEstimator

ESTIMATORS = {
    "logistic_surrogate": LogisticSurrogateEstimator,
}


def load_estimator(path, kind="logistic_surrogate"):
    """Instantiate a registered estimator from its parameter file."""
    from data_model.errors import ValidationError

    if kind not in ESTIMATORS:
        raise ValidationError(
            f"Unsupported arousal estimator '{kind}'. Supported: {', '.join(ESTIMATORS)}"
        )
    return ESTIMATORS[kind].from_file(path)
