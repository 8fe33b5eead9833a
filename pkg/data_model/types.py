"""
Domain types shared by every pipeline stage.

All containers are frozen dataclasses; arrays stored on them are made
read-only so a Cohort can be shared between concurrent readers.
"""
from __future__ import annotations

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

from data_model.errors import ValidationError
from config.config import Config


class Group(StrEnum):
    TREATMENT = "treatment"
    PLACEBO = "placebo"
    REFERENCE = "reference"

    @property
    def is_control(self):
        return self is not Group.TREATMENT


class Modality(StrEnum):
    IBI_MS = "ibi_ms"
    HR_BPM = "hr_bpm"
    AROUSAL_PROB = "arousal_prob"
    ACCEL_X_G = "accel_x_g"
    ACCEL_Y_G = "accel_y_g"
    ACCEL_Z_G = "accel_z_g"
    ACCEL_MAG_G = "accel_mag_g"


class Scenario(StrEnum):
    HIGHWAY = "highway"
    RURAL = "rural"
    URBAN = "urban"


class Task(StrEnum):
    EARLY_WARNING = "early_warning"
    ABOVE_LIMIT = "above_limit"
    PHASE_CATEGORICAL = "phase_categorical"
    BAC_REGRESSION = "bac_regression"

    @property
    def is_binary(self):
        return self in (Task.EARLY_WARNING, Task.ABOVE_LIMIT)

    @classmethod
    def from_cli(cls, name):
        """Accept the short CLI spellings (early, above, phase, bac) as well as full names."""
        aliases = {
            "early": cls.EARLY_WARNING,
            "above": cls.ABOVE_LIMIT,
            "phase": cls.PHASE_CATEGORICAL,
            "bac": cls.BAC_REGRESSION,
        }
        if name in aliases:
            return aliases[name]
        try:
            return cls(name)
        except ValueError:
            raise ValidationError(f"Unknown task '{name}'. Use one of: {', '.join(aliases)}")


def _frozen_array(values, dtype=float):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Participant:
    id: str
    group: Group

    def __post_init__(self):
        if not self.id:
            raise ValidationError("Participant id must be a non-empty string")
        try:
            object.__setattr__(self, "group", Group(self.group))
        except ValueError:
            raise ValidationError(f"Unknown group '{self.group}' for participant {self.id}")


@dataclass(frozen=True)
class DrivingPhase:
    participant_id: str
    phase_index: int
    start_s: float
    end_s: float
    scenario_sequence: tuple = ()

    def __post_init__(self):
        if self.phase_index not in (1, 2, 3):
            raise ValidationError(f"Phase index must be 1, 2 or 3, got {self.phase_index}")
        if not self.start_s < self.end_s:
            raise ValidationError(
                f"Phase {self.phase_index} of {self.participant_id} has start {self.start_s} >= end {self.end_s}"
            )
        object.__setattr__(self, "scenario_sequence", tuple(Scenario(s) for s in self.scenario_sequence))

    @property
    def duration_s(self):
        return self.end_s - self.start_s

    def contains(self, start_s, end_s):
        """True when [start_s, end_s] lies entirely inside the phase (both ends inclusive)."""
        return start_s >= self.start_s - 1e-9 and end_s <= self.end_s + 1e-9


@dataclass(frozen=True)
class SampleSeries:
    modality: Modality
    timestamps: np.ndarray
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        timestamps = _frozen_array(self.timestamps)
        values = _frozen_array(self.values)
        if timestamps.shape != values.shape or timestamps.ndim != 1:
            raise ValidationError(
                f"{self.modality} series needs 1-d timestamps and values of equal length, "
                f"got {timestamps.shape} and {values.shape}"
            )
        if timestamps.size > 1 and np.any(np.diff(timestamps) <= 0):
            row = int(np.argmax(np.diff(timestamps) <= 0)) + 1
            raise ValidationError(f"{self.modality} timestamps are not strictly increasing at sample {row}")
        if not self.normalized and values.size:
            if self.modality is Modality.AROUSAL_PROB and (values.min() < 0 or values.max() > 1):
                raise ValidationError("arousal_prob values must lie in [0, 1]")
            if self.modality in (Modality.IBI_MS, Modality.HR_BPM) and values.min() <= 0:
                raise ValidationError(f"{self.modality} values must be positive")
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.timestamps.size

    def between(self, start_s, end_s):
        """Return the samples with start_s <= t <= end_s."""
        lo = np.searchsorted(self.timestamps, start_s, side="left")
        hi = np.searchsorted(self.timestamps, end_s, side="right")
        return SampleSeries(self.modality, self.timestamps[lo:hi], self.values[lo:hi], self.normalized)

    def with_values(self, values, normalized=None):
        return SampleSeries(
            self.modality,
            self.timestamps,
            values,
            self.normalized if normalized is None else normalized,
        )


@dataclass(frozen=True)
class BacMeasurement:
    participant_id: str
    timestamp: float
    bac_g_per_dl: float
    brac_mg_per_l: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.bac_g_per_dl) or self.bac_g_per_dl < 0:
            raise ValidationError(f"BAC must be >= 0, got {self.bac_g_per_dl} for {self.participant_id}")
        if self.brac_mg_per_l is not None:
            expected = self.brac_mg_per_l * Config.BRAC_TO_BAC_FACTOR
            if abs(expected - self.bac_g_per_dl) > 1e-9:
                raise ValidationError(
                    f"BAC {self.bac_g_per_dl} does not match BrAC {self.brac_mg_per_l} x {Config.BRAC_TO_BAC_FACTOR}"
                )


@dataclass(frozen=True)
class TaskLabel:
    task: Task
    value: float

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        if self.task.is_binary and self.value not in (0, 1):
            raise ValidationError(f"{self.task} label must be 0 or 1, got {self.value}")
        if self.task is Task.PHASE_CATEGORICAL and self.value not in (1, 2, 3):
            raise ValidationError(f"Phase label must be 1, 2 or 3, got {self.value}")


@dataclass(frozen=True)
class ParticipantRecord:
    participant: Participant
    phases: tuple
    series: dict = field(default_factory=dict)
    bac: tuple = ()

    def __post_init__(self):
        phases = tuple(sorted(self.phases, key=lambda p: p.phase_index))
        for earlier, later in zip(phases, phases[1:]):
            if earlier.phase_index == later.phase_index:
                raise ValidationError(f"Duplicate phase {later.phase_index} for {self.participant.id}")
            if later.start_s < earlier.end_s:
                raise ValidationError(
                    f"Phases {earlier.phase_index} and {later.phase_index} of {self.participant.id} overlap or are out of order"
                )
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "bac", tuple(sorted(self.bac, key=lambda m: m.timestamp)))

    @property
    def id(self):
        return self.participant.id

    @property
    def group(self):
        return self.participant.group

    def phase(self, index):
        for phase in self.phases:
            if phase.phase_index == index:
                return phase
        raise ValidationError(f"Participant {self.id} has no phase {index}")

    def phase_at(self, start_s, end_s):
        """The phase fully containing [start_s, end_s], or None."""
        for phase in self.phases:
            if phase.contains(start_s, end_s):
                return phase
        return None


@dataclass(frozen=True)
class Cohort:
    records: tuple
    root: str = ""

    def __post_init__(self):
        ids = [record.id for record in self.records]
        duplicates = sorted({pid for pid in ids if ids.count(pid) > 1})
        if duplicates:
            raise ValidationError(f"Duplicate participant ids in cohort: {', '.join(duplicates)}")
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def participant_ids(self):
        return [record.id for record in self.records]

    def get(self, participant_id):
        for record in self.records:
            if record.id == participant_id:
                return record
        raise KeyError(participant_id)

    def groups(self):
        return {record.id: record.group for record in self.records}

    def subset(self, group_filter):
        """
        Restrict to "treatment", "control" (placebo + reference) or a single group name.
        """
        if group_filter in (None, "all"):
            return self
        if group_filter == "control":
            keep = [r for r in self.records if r.group.is_control]
        else:
            keep = [r for r in self.records if r.group == Group(group_filter)]
        return Cohort(tuple(keep), self.root)
