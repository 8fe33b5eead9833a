import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

CONFIG_DIR = os.path.dirname(os.path.abspath(__file__))


class Config:
    # Run-level settings
    ROOT_SEED = int(os.getenv("IMPAIRDETECT_SEED", "0"))
    THREADS = int(os.getenv("IMPAIRDETECT_THREADS", "1"))
    LOG_LEVEL = os.getenv("IMPAIRDETECT_LOG_LEVEL", "INFO")
    LOG_FILE = os.getenv("IMPAIRDETECT_LOG_FILE", "")
    TOOL_VERSION = "0.3.0"

    # Ground truth
    BRAC_TO_BAC_FACTOR = 0.2
    EARLY_WARNING_THRESHOLD = 0.00
    ABOVE_LIMIT_THRESHOLD = 0.05

    # Signal cleaning
    IBI_BOUNDS_MS = (300.0, 2000.0)
    IBI_MAX_RELATIVE_DIFF = 0.5
    HR_BOUNDS_BPM = (30.0, 220.0)

    # Arousal estimation
    AROUSAL_WINDOW_S = 60.0
    AROUSAL_STEP_S = 1.0
    AROUSAL_MIN_IBI_SAMPLES = 3
    SURROGATE_AROUSAL_PATH = os.path.join(CONFIG_DIR, "surrogate_arousal.json")

    # Windowing
    AROUSAL_RATE_HZ = 1
    ACCEL_RATE_HZ = 25
    FEATURE_WINDOW = {"length_s": 180.0, "step_s": 45.0, "min_coverage": 0.5}
    CNN_WINDOW = {"length_s": 180.0, "step_s": 15.0, "min_coverage": 1.0 / 3.0}
    SWEEP_LENGTHS_S = (30, 60, 120, 180, 300, 450, 600)

    # Features and linear model
    FEATURE_CATALOG_PATH = os.path.join(CONFIG_DIR, "feature_catalog.json")
    MISSING_COLUMN_THRESHOLD = 0.5
    LAMBDA_RATIO = 0.01
    LASSO_TOLERANCE = 1e-6
    LASSO_MAX_SWEEPS = 20000

    # Neural model
    TRAIN_CONFIG_PATH = os.path.join(CONFIG_DIR, "train_cnn.json")
    TRAIN_DEFAULTS = {
        "lr": 1e-3,
        "betas": [0.9, 0.999],
        "eps": 1e-8,
        "weight_decay": 1e-2,
        "batch_size": 64,
        "scheduler_factor": 0.5,
        "scheduler_patience": 3,
        "early_stopping_patience": 10,
        "max_epochs": 100,
        "dropout": 0.3,
        "dtype": "float32",
    }

    # Evaluation
    VALIDATION_PARTICIPANTS = 10
    MIN_VALIDATION_PARTICIPANTS = 2
    CMA_BIN_S = 15.0
    DELONG_LEVEL = 0.99

    # Synthetic cohorts
    SYNTH_DESK_PATH = os.path.join(CONFIG_DIR, "synth_desk.json")
