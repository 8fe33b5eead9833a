"""
Short-window IBI/HR features and their mapping to an arousal-probability series.
"""
from dataclasses import astuple, dataclass, fields

import numpy as np

from config.config import Config
from data_model.errors import ValidationError
from data_model.types import Modality, SampleSeries


@dataclass(frozen=True)
class ArousalFeatureRow:
    window_center: float
    ibi_mean: float
    ibi_std: float
    ibi_median: float
    ibi_min: float
    ibi_max: float
    ibi_p20: float
    ibi_p80: float
    ibi_rmssd: float
    hr_mean: float
    hr_std: float
    hr_median: float
    hr_p20: float
    hr_p80: float

    def feature_values(self):
        return np.array(astuple(self)[1:], dtype=float)


AROUSAL_FEATURE_NAMES = tuple(f.name for f in fields(ArousalFeatureRow))[1:]


def rmssd(values):
    """Root mean square of successive differences."""
    differences = np.diff(np.asarray(values, dtype=float))
    if differences.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(differences ** 2)))


def _window_row(center, ibi, hr):
    ibi_p20, ibi_median, ibi_p80 = np.percentile(ibi, [20, 50, 80])
    hr_p20, hr_median, hr_p80 = np.percentile(hr, [20, 50, 80])
    return ArousalFeatureRow(
        window_center=float(center),
        ibi_mean=float(np.mean(ibi)),
        ibi_std=float(np.std(ibi)),
        ibi_median=float(ibi_median),
        ibi_min=float(np.min(ibi)),
        ibi_max=float(np.max(ibi)),
        ibi_p20=float(ibi_p20),
        ibi_p80=float(ibi_p80),
        ibi_rmssd=rmssd(ibi),
        hr_mean=float(np.mean(hr)),
        hr_std=float(np.std(hr)),
        hr_median=float(hr_median),
        hr_p20=float(hr_p20),
        hr_p80=float(hr_p80),
    )


def compute_arousal_features(ibi, hr, window_s=None, step_s=None, min_ibi_samples=None):
    """
    Slide a window over the cleaned, normalized IBI and HR series and compute
    8 IBI and 5 HR statistics per window. Windows [s, s + window_s) start on
    multiples of step_s; windows with fewer than 3 IBI samples or no HR sample
    are skipped. Rows are timestamped at the window center.
    """
    window_s = Config.AROUSAL_WINDOW_S if window_s is None else window_s
    step_s = Config.AROUSAL_STEP_S if step_s is None else step_s
    min_ibi_samples = Config.AROUSAL_MIN_IBI_SAMPLES if min_ibi_samples is None else min_ibi_samples
    if ibi.modality is not Modality.IBI_MS or hr.modality is not Modality.HR_BPM:
        raise ValidationError("compute_arousal_features expects an ibi_ms and an hr_bpm series")
    if len(ibi) == 0 or len(hr) == 0:
        raise ValidationError("compute_arousal_features needs non-empty IBI and HR series")
    if window_s <= 0 or step_s <= 0:
        raise ValidationError("Arousal window length and step must be positive")

    first = np.floor(ibi.timestamps[0] / step_s) * step_s
    last = ibi.timestamps[-1]
    starts = first + step_s * np.arange(int(np.floor((last - first) / step_s)) + 1)

    ibi_lo = np.searchsorted(ibi.timestamps, starts, side="left")
    ibi_hi = np.searchsorted(ibi.timestamps, starts + window_s, side="left")
    hr_lo = np.searchsorted(hr.timestamps, starts, side="left")
    hr_hi = np.searchsorted(hr.timestamps, starts + window_s, side="left")
    valid = np.flatnonzero((ibi_hi - ibi_lo >= min_ibi_samples) & (hr_hi - hr_lo >= 1))

    rows = []
    for k in valid:
        rows.append(
            _window_row(
                starts[k] + window_s / 2.0,
                ibi.values[ibi_lo[k]:ibi_hi[k]],
                hr.values[hr_lo[k]:hr_hi[k]],
            )
        )
    return rows


def estimate_arousal(rows, estimator):
    """
    Run the estimator on every feature row. Output is one arousal_prob sample per
    row at the row's window center, independent of the order rows are supplied in.
    """
    if not rows:
        return SampleSeries(Modality.AROUSAL_PROB, np.empty(0), np.empty(0))
    ordered = sorted(rows, key=lambda row: row.window_center)
    matrix = np.vstack([row.feature_values() for row in ordered])
    if not np.all(np.isfinite(matrix)):
        bad = int(np.argmax(~np.all(np.isfinite(matrix), axis=1)))
        raise ValidationError(f"Non-finite arousal feature at window center {ordered[bad].window_center}")
    probabilities = np.clip(estimator.predict_batch(matrix, AROUSAL_FEATURE_NAMES), 0.0, 1.0)
    centers = np.array([row.window_center for row in ordered], dtype=float)
    return SampleSeries(Modality.AROUSAL_PROB, centers, probabilities)
