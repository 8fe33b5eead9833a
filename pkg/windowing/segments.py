"""
Sliding-window segmentation of the derived arousal and acceleration streams.
"""
import logging
from dataclasses import dataclass, field
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self):
            return str.__str__(self)

        def __format__(self, format_spec):
            return str.__format__(str(self), format_spec)

import numpy as np

from config.config import Config
from data_model.errors import ValidationError
from data_model.labels import assign_all_labels
from data_model.types import Modality
from windowing.grids import impute, resample_to_grid

logger = logging.getLogger(__name__)

GRID_MODALITIES = {
    "arousal": Modality.AROUSAL_PROB,
    "accel": Modality.ACCEL_MAG_G,
}


class Pipeline(StrEnum):
    FEATURE = "feature"
    CNN = "cnn"


@dataclass(frozen=True)
class WindowSpec:
    length_s: float
    step_s: float
    min_coverage: float
    pipeline: Pipeline = Pipeline.FEATURE

    def __post_init__(self):
        object.__setattr__(self, "pipeline", Pipeline(self.pipeline))
        if self.length_s <= 0 or self.step_s <= 0:
            raise ValidationError("Window length and step must be positive")
        if self.step_s > self.length_s:
            raise ValidationError(f"Window step {self.step_s} exceeds length {self.length_s}")
        if not 0 < self.min_coverage <= 1:
            raise ValidationError(f"min_coverage must lie in (0, 1], got {self.min_coverage}")

    @classmethod
    def feature(cls, length_s=None, step_s=None):
        defaults = Config.FEATURE_WINDOW
        return cls(
            length_s=defaults["length_s"] if length_s is None else float(length_s),
            step_s=defaults["step_s"] if step_s is None else float(step_s),
            min_coverage=defaults["min_coverage"],
            pipeline=Pipeline.FEATURE,
        )

    @classmethod
    def cnn(cls, length_s=None, step_s=None):
        defaults = Config.CNN_WINDOW
        return cls(
            length_s=defaults["length_s"] if length_s is None else float(length_s),
            step_s=defaults["step_s"] if step_s is None else float(step_s),
            min_coverage=defaults["min_coverage"],
            pipeline=Pipeline.CNN,
        )

    @property
    def arousal_size(self):
        return int(round(self.length_s * Config.AROUSAL_RATE_HZ))

    @property
    def accel_size(self):
        return int(round(self.length_s * Config.ACCEL_RATE_HZ))

    def to_dict(self):
        return {
            "length_s": self.length_s,
            "step_s": self.step_s,
            "min_coverage": self.min_coverage,
            "pipeline": str(self.pipeline),
        }


@dataclass
class WindowSegment:
    participant_id: str
    phase_index: int
    start_s: float
    spec: WindowSpec
    arousal_grid: np.ndarray
    accel_grid: np.ndarray
    coverage: dict
    group: str = ""
    phase_start_s: float = 0.0
    labels: dict = field(default_factory=dict)

    @property
    def end_s(self):
        return self.start_s + self.spec.length_s

    @property
    def center_s(self):
        return self.start_s + 0.5 * self.spec.length_s

    @property
    def key(self):
        return (self.participant_id, self.phase_index, round(self.start_s, 6))

    def grid(self, modality):
        return self.arousal_grid if modality == "arousal" else self.accel_grid

    def label(self, task):
        return self.labels[task].value


def quarter_step(length_s):
    """Step size used by the window-length sweep: one quarter of the window length."""
    return length_s / 4.0


def window_count(phase_length_s, length_s, step_s):
    """Candidate windows of one phase: max(0, floor((phase_len - length) / step) + 1)."""
    if phase_length_s < length_s:
        return 0
    return int(np.floor((phase_length_s - length_s) / step_s + 1e-9)) + 1


def segment(series, phases, spec, record=None):
    """
    Cut every phase into windows starting at phase_start + k * step.

    A window is emitted when it lies fully inside its phase and every modality's
    raw-sample coverage reaches spec.min_coverage; the grids of emitted windows are
    imputed. When the participant record is given, labels for all tasks are attached.

    Parameters:
        series (dict): {Modality.AROUSAL_PROB: SampleSeries, Modality.ACCEL_MAG_G: SampleSeries}
        phases (list of DrivingPhase): phases of one participant.
        spec (WindowSpec): window length, step and coverage gate.
        record (ParticipantRecord, optional): supplies group and BAC for labels.
    """
    if not phases:
        raise ValidationError("segment needs at least one driving phase")
    missing = [str(m) for m in GRID_MODALITIES.values() if m not in series]
    if missing:
        raise ValidationError(f"segment needs series for {', '.join(missing)}")

    rates = {"arousal": Config.AROUSAL_RATE_HZ, "accel": Config.ACCEL_RATE_HZ}
    windows = []
    dropped = 0
    for phase in sorted(phases, key=lambda p: p.phase_index):
        phase_series = {
            name: series[modality].between(phase.start_s, phase.end_s) for name, modality in GRID_MODALITIES.items()
        }
        if all(len(s) == 0 for s in phase_series.values()):
            raise ValidationError(f"Phase {phase.phase_index} of {phase.participant_id} holds no samples")

        for k in range(window_count(phase.duration_s, spec.length_s, spec.step_s)):
            start_s = phase.start_s + k * spec.step_s
            assert phase.contains(start_s, start_s + spec.length_s)
            grids, coverage = {}, {}
            for name, rate in rates.items():
                grids[name], coverage[name] = resample_to_grid(series[GRID_MODALITIES[name]], start_s, spec.length_s, rate)
            if any(value < spec.min_coverage - 1e-12 for value in coverage.values()):
                dropped += 1
                continue
            window = WindowSegment(
                participant_id=phase.participant_id,
                phase_index=phase.phase_index,
                start_s=start_s,
                spec=spec,
                arousal_grid=impute(grids["arousal"]),
                accel_grid=impute(grids["accel"]),
                coverage=coverage,
                group=str(record.group) if record is not None else "",
                phase_start_s=phase.start_s,
            )
            if record is not None:
                window.labels = assign_all_labels(window, record)
            windows.append(window)

    if dropped:
        logger.info("Dropped %d windows of %s below coverage %.2f", dropped, phases[0].participant_id, spec.min_coverage)
    return windows


def segment_cohort(cohort, spec, normalization="standard"):
    """
    Segment every participant of a preprocessed cohort in canonical
    (participant, phase, start) order. With normalization="per_phase" both
    streams are z-scored within each participant phase before windowing.
    """
    from preprocess.cleaning import zscore_normalize

    if normalization not in ("standard", "per_phase"):
        raise ValidationError(f"Unknown normalization '{normalization}'")
    windows = []
    for record in cohort:
        series = {modality: record.series[modality] for modality in GRID_MODALITIES.values() if modality in record.series}
        if normalization == "per_phase":
            series = {m: zscore_normalize(s, "participant_phase", record.phases)[0] for m, s in series.items()}
        windows.extend(segment(series, record.phases, spec, record=record))
    logger.info("Segmented %d participants into %d %s windows", len(cohort), len(windows), spec.pipeline)
    return windows
