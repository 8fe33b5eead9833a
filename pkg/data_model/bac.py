import numpy as np

from config.config import Config
from data_model.errors import ValidationError


def brac_to_bac(brac_mg_per_l):
    """
    Convert breath alcohol (mg/L) to blood alcohol (g/dL) with the fixed 0.2 factor.
    """
    brac = float(brac_mg_per_l)
    if not np.isfinite(brac) or brac < 0:
        raise ValidationError(f"BrAC must be a non-negative number, got {brac_mg_per_l}")
    return brac * Config.BRAC_TO_BAC_FACTOR


def interpolate_bac(measurements, t):
    """
    Linearly interpolate BAC at time t (s) between the bracketing measurements.
    Outside the measured range the nearest measured value is returned.
    """
    if not measurements:
        raise ValidationError("Cannot interpolate BAC from an empty measurement list")
    ordered = sorted(measurements, key=lambda m: m.timestamp)
    times = np.array([m.timestamp for m in ordered], dtype=float)
    values = np.array([m.bac_g_per_dl for m in ordered], dtype=float)
    # np.interp clamps to the edge values outside [times[0], times[-1]]
    return float(np.interp(t, times, values))
