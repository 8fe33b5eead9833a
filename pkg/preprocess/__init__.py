from .arousal import AROUSAL_FEATURE_NAMES, ArousalFeatureRow, compute_arousal_features, estimate_arousal
from .cleaning import NormStats, accel_magnitude, remove_outliers, zscore_normalize
from .estimators import ESTIMATORS, ArousalEstimator, LogisticSurrogateEstimator, load_estimator
from .pipeline import preprocess_cohort, preprocess_participant, write_preprocessed
