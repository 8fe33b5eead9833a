from data_model.bac import interpolate_bac
from data_model.errors import ValidationError
from data_model.types import Group, Task, TaskLabel

# Phase-level intoxication state of treatment participants:
# phase 1 sober, phase 2 severe (BAC > 0.05), phase 3 moderate (0 < BAC <= 0.05).
EARLY_WARNING_PHASES = (2, 3)
ABOVE_LIMIT_PHASES = (2,)


def assign_label(window, task, record):
    """
    Assign the label of one task to a window.

    Binary tasks follow the phase-level labeling: treatment phases 2 and 3 are
    positive for early warning, treatment phase 2 for above limit, and every
    placebo/reference window is negative. The regression target is the BAC
    interpolated at the window center.

    Parameters:
        window: any object with participant_id, phase_index, start_s and end_s.
        task (Task or str): the task to label.
        record (ParticipantRecord): supplies group, phases and BAC measurements.
    """
    task = Task(task)
    if record.id != window.participant_id:
        raise ValidationError(f"Window of {window.participant_id} labeled with record of {record.id}")

    phase = record.phase_at(window.start_s, window.end_s)
    if phase is None or phase.phase_index != window.phase_index:
        raise ValidationError(
            f"Window [{window.start_s}, {window.end_s}] of {record.id} does not lie inside phase {window.phase_index}"
        )

    treated = record.group is Group.TREATMENT
    if task is Task.EARLY_WARNING:
        return TaskLabel(task, int(treated and phase.phase_index in EARLY_WARNING_PHASES))
    if task is Task.ABOVE_LIMIT:
        return TaskLabel(task, int(treated and phase.phase_index in ABOVE_LIMIT_PHASES))
    if task is Task.PHASE_CATEGORICAL:
        return TaskLabel(task, phase.phase_index)

    if not record.bac:
        if treated:
            raise ValidationError(f"No BAC measurements to resolve regression target for {record.id}")
        return TaskLabel(task, 0.0)
    center = 0.5 * (window.start_s + window.end_s)
    return TaskLabel(task, interpolate_bac(record.bac, center))


def assign_all_labels(window, record):
    """Labels for every task, keyed by task."""
    return {task: assign_label(window, task, record) for task in Task}
