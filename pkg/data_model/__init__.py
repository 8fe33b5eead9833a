from .bac import brac_to_bac, interpolate_bac
from .errors import IngestionError, ValidationError
from .ingest import ingest_cohort
from .labels import assign_all_labels, assign_label
from .types import (
    BacMeasurement,
    Cohort,
    DrivingPhase,
    Group,
    Modality,
    Participant,
    ParticipantRecord,
    SampleSeries,
    Scenario,
    Task,
    TaskLabel,
)
