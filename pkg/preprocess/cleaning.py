import logging
from dataclasses import dataclass, field

import numpy as np

from config.config import Config
from data_model.errors import ValidationError
from data_model.types import Modality, SampleSeries

logger = logging.getLogger(__name__)

SCOPES = ("participant", "participant_phase")
ZERO_VARIANCE_EPS = 1e-12


@dataclass(frozen=True)
class ScopeStats:
    mean: float
    std: float
    n: int
    zero_variance: bool = False


@dataclass
class NormStats:
    """Statistics used by zscore_normalize, keyed by scope ("participant", "phase_1", ..., "outside")."""
    modality: str
    scope: str
    entries: dict = field(default_factory=dict)

    @property
    def zero_variance(self):
        return any(stats.zero_variance for stats in self.entries.values())

    def to_dict(self):
        return {
            "modality": str(self.modality),
            "scope": self.scope,
            "entries": {key: vars(stats) for key, stats in self.entries.items()},
        }


def remove_outliers(series, ibi_bounds=None, max_relative_diff=None, hr_bounds=None):
    """
    Drop physiologically implausible samples while preserving order.

    IBI: samples outside the bounds are removed first, then every sample whose
    relative difference to the previously retained sample exceeds max_relative_diff.
    HR: samples outside the bounds are removed.
    """
    if series.modality is Modality.IBI_MS:
        low, high = ibi_bounds or Config.IBI_BOUNDS_MS
        max_relative_diff = Config.IBI_MAX_RELATIVE_DIFF if max_relative_diff is None else max_relative_diff
        keep = (series.values >= low) & (series.values <= high)
        candidates = np.flatnonzero(keep)
        kept = []
        previous = None
        for index in candidates:
            value = series.values[index]
            if previous is not None and abs(value - previous) / previous > max_relative_diff:
                continue
            kept.append(index)
            previous = value
        kept = np.asarray(kept, dtype=int)
    elif series.modality is Modality.HR_BPM:
        low, high = hr_bounds or Config.HR_BOUNDS_BPM
        kept = np.flatnonzero((series.values >= low) & (series.values <= high))
    else:
        raise ValidationError(f"Outlier removal applies to ibi_ms or hr_bpm, not {series.modality}")

    dropped = len(series) - kept.size
    if dropped:
        logger.debug("Removed %d %s outliers", dropped, series.modality)
    return SampleSeries(series.modality, series.timestamps[kept], series.values[kept], series.normalized)


def _scope_stats(values, label):
    mean = float(np.mean(values))
    std = float(np.std(values))
    zero_variance = std < ZERO_VARIANCE_EPS
    if zero_variance:
        logger.warning("Zero variance in %s scope; series centered only", label)
    return ScopeStats(mean=mean, std=std, n=int(values.size), zero_variance=zero_variance)


def _apply(values, stats):
    centered = values - stats.mean
    return centered if stats.zero_variance else centered / stats.std


def zscore_normalize(series, scope="participant", phases=None):
    """
    Z-score a series within the participant or within each participant phase.

    Returns (normalized series, NormStats). Population std (ddof 0) is used.
    A zero-variance scope is centered only and flagged in the stats.
    Samples outside every phase under "participant_phase" use participant-level stats.
    """
    if scope not in SCOPES:
        raise ValidationError(f"Unknown normalization scope '{scope}'; use one of {SCOPES}")
    if len(series) < 2:
        raise ValidationError(f"Need at least 2 samples to normalize {series.modality}, got {len(series)}")

    values = series.values
    participant_stats = _scope_stats(values, f"{series.modality} participant")
    stats = NormStats(modality=series.modality, scope=scope)

    if scope == "participant":
        stats.entries["participant"] = participant_stats
        return series.with_values(_apply(values, participant_stats), normalized=True), stats

    if not phases:
        raise ValidationError("participant_phase normalization needs the participant's phases")
    normalized = np.empty_like(values)
    assigned = np.zeros(values.size, dtype=bool)
    for phase in phases:
        mask = (series.timestamps >= phase.start_s) & (series.timestamps <= phase.end_s)
        if not mask.any():
            continue
        phase_stats = _scope_stats(values[mask], f"{series.modality} phase {phase.phase_index}")
        stats.entries[f"phase_{phase.phase_index}"] = phase_stats
        normalized[mask] = _apply(values[mask], phase_stats)
        assigned |= mask
    if (~assigned).any():
        stats.entries["outside"] = participant_stats
        normalized[~assigned] = _apply(values[~assigned], participant_stats)
    return series.with_values(normalized, normalized=True), stats


def accel_magnitude(x, y, z):
    """
    Euclidean norm of the three acceleration axes, joined on timestamps.
    Samples missing from any axis are dropped.
    """
    common, ix, iy = np.intersect1d(x.timestamps, y.timestamps, assume_unique=True, return_indices=True)
    common, jc, iz = np.intersect1d(common, z.timestamps, assume_unique=True, return_indices=True)
    ix, iy = ix[jc], iy[jc]
    unmatched = max(len(x), len(y), len(z)) - common.size
    if unmatched:
        logger.warning("Dropped %d accelerometer samples without a match on all three axes", unmatched)
    magnitude = np.sqrt(x.values[ix] ** 2 + y.values[iy] ** 2 + z.values[iz] ** 2)
    return SampleSeries(Modality.ACCEL_MAG_G, common, magnitude)
