import json
import os

import pytest

from data_model.bac import brac_to_bac, interpolate_bac
from data_model.errors import IngestionError, ValidationError
from data_model.ingest import ingest_cohort
from data_model.labels import assign_label
from data_model.types import (
    BacMeasurement,
    DrivingPhase,
    Group,
    Modality,
    Participant,
    ParticipantRecord,
    SampleSeries,
    Task,
)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as file:
        file.write(",".join(header) + "\n")
        for row in rows:
            file.write(",".join(str(v) for v in row) + "\n")


def write_cohort(root, ids=("T01", "P01"), accel=True):
    participants = []
    bac_rows = []
    for pid in ids:
        group = "treatment" if pid.startswith("T") else "placebo"
        write_csv(os.path.join(root, f"{pid}_ibi.csv"), ["t_s", "value"], [(t, 800 + t) for t in range(10)])
        write_csv(os.path.join(root, f"{pid}_hr.csv"), ["t_s", "value"], [(t, 75) for t in range(10)])
        files = {"ibi": f"{pid}_ibi.csv", "hr": f"{pid}_hr.csv", "accel": f"{pid}_accel.csv"}
        if accel:
            write_csv(os.path.join(root, f"{pid}_accel.csv"), ["t_s", "x_g", "y_g", "z_g"], [(t / 25, 0, 0, 1) for t in range(50)])
        participants.append({
            "id": pid,
            "group": group,
            "phases": [{"index": 1, "start_s": 0, "end_s": 3}, {"index": 2, "start_s": 4, "end_s": 6}, {"index": 3, "start_s": 7, "end_s": 9}],
            "files": files,
        })
        bac_rows.append((pid, 0, 0.0))
    write_csv(os.path.join(root, "bac.csv"), ["participant_id", "t_s", "bac_g_per_dl"], bac_rows)
    with open(os.path.join(root, "manifest.json"), "w", encoding="utf-8") as file:
        json.dump({"participants": participants, "bac_file": "bac.csv"}, file)


def make_record(group="treatment", bac=()):
    phases = (
        DrivingPhase("T01", 1, 0.0, 100.0),
        DrivingPhase("T01", 2, 200.0, 300.0),
        DrivingPhase("T01", 3, 400.0, 500.0),
    )
    return ParticipantRecord(Participant("T01", group), phases, bac=bac)


class Window:
    def __init__(self, phase_index, start_s, end_s, participant_id="T01"):
        self.participant_id = participant_id
        self.phase_index = phase_index
        self.start_s = start_s
        self.end_s = end_s


def test_brac_to_bac():
    assert brac_to_bac(0.25) == pytest.approx(0.05)
    assert brac_to_bac(0.0) == 0.0
    assert brac_to_bac(0.40) == pytest.approx(0.08)
    with pytest.raises(ValidationError):
        brac_to_bac(-0.1)


def test_interpolate_bac():
    measurements = [BacMeasurement("T01", 0.0, 0.08), BacMeasurement("T01", 100.0, 0.06)]
    assert interpolate_bac(measurements, 50.0) == pytest.approx(0.07)
    assert interpolate_bac(measurements, -10.0) == pytest.approx(0.08)
    assert interpolate_bac(measurements, 500.0) == pytest.approx(0.06)

    decaying = [BacMeasurement("T01", 200.0, 0.02), BacMeasurement("T01", 0.0, 0.08)]
    assert interpolate_bac(decaying, 150.0) == pytest.approx(0.035)


def test_bac_measurement_checks_breath_conversion():
    BacMeasurement("T01", 0.0, 0.05, brac_mg_per_l=0.25)
    with pytest.raises(ValidationError):
        BacMeasurement("T01", 0.0, 0.06, brac_mg_per_l=0.25)
    with pytest.raises(ValidationError):
        BacMeasurement("T01", 0.0, -0.01)


def test_assign_label_phase_rules():
    treatment = make_record("treatment")
    placebo = make_record("placebo")
    phase_3 = Window(3, 410.0, 470.0)
    phase_2 = Window(2, 210.0, 270.0)

    assert assign_label(phase_3, Task.EARLY_WARNING, treatment).value == 1
    assert assign_label(phase_3, Task.ABOVE_LIMIT, treatment).value == 0
    assert assign_label(phase_2, Task.ABOVE_LIMIT, treatment).value == 1
    assert assign_label(Window(1, 0.0, 60.0), Task.EARLY_WARNING, treatment).value == 0
    for task in (Task.EARLY_WARNING, Task.ABOVE_LIMIT):
        assert assign_label(phase_2, task, placebo).value == 0
    assert assign_label(phase_3, Task.PHASE_CATEGORICAL, placebo).value == 3


def test_assign_label_regression_uses_window_center():
    record = make_record("treatment", bac=(BacMeasurement("T01", 200.0, 0.08), BacMeasurement("T01", 300.0, 0.06)))
    label = assign_label(Window(2, 220.0, 280.0), Task.BAC_REGRESSION, record)
    assert label.value == pytest.approx(0.07)

    with pytest.raises(ValidationError):
        assign_label(Window(2, 220.0, 280.0), Task.BAC_REGRESSION, make_record("treatment"))
    assert assign_label(Window(2, 220.0, 280.0), Task.BAC_REGRESSION, make_record("reference")).value == 0.0


def test_assign_label_rejects_window_outside_phase():
    with pytest.raises(ValidationError):
        assign_label(Window(2, 280.0, 340.0), Task.EARLY_WARNING, make_record())


def test_sample_series_requires_increasing_timestamps():
    with pytest.raises(ValidationError):
        SampleSeries(Modality.IBI_MS, [0.0, 2.0, 1.0], [800, 810, 820])
    with pytest.raises(ValidationError):
        SampleSeries(Modality.AROUSAL_PROB, [0.0, 1.0], [0.5, 1.5])


def test_participant_rejects_unknown_group():
    assert Participant("X", "reference").group is Group.REFERENCE
    with pytest.raises(ValidationError):
        Participant("X", "sober")


def test_overlapping_phases_rejected():
    phases = (DrivingPhase("T01", 1, 0.0, 100.0), DrivingPhase("T01", 2, 50.0, 150.0))
    with pytest.raises(ValidationError):
        ParticipantRecord(Participant("T01", "treatment"), phases)


def test_task_cli_aliases():
    assert Task.from_cli("early") is Task.EARLY_WARNING
    assert Task.from_cli("above_limit") is Task.ABOVE_LIMIT
    with pytest.raises(ValidationError):
        Task.from_cli("later")


def test_ingest_cohort(tmp_path):
    write_cohort(str(tmp_path))
    cohort = ingest_cohort(str(tmp_path))

    assert cohort.participant_ids == ["T01", "P01"]
    record = cohort.get("T01")
    assert record.group is Group.TREATMENT
    assert [p.phase_index for p in record.phases] == [1, 2, 3]
    assert len(record.series[Modality.IBI_MS]) == 10
    assert set(record.series) >= {Modality.ACCEL_X_G, Modality.ACCEL_Y_G, Modality.ACCEL_Z_G}
    assert record.bac[0].bac_g_per_dl == 0.0


def test_ingest_reports_file_and_row_of_decreasing_timestamps(tmp_path):
    write_cohort(str(tmp_path))
    write_csv(str(tmp_path / "T01_hr.csv"), ["t_s", "value"], [(0, 70), (1, 71), (0.5, 72)])

    with pytest.raises(IngestionError) as error:
        ingest_cohort(str(tmp_path))
    assert error.value.path.endswith("T01_hr.csv")
    assert error.value.row == 4
    assert "non-monotonic" in str(error.value)


def test_ingest_missing_accel_file(tmp_path):
    write_cohort(str(tmp_path), accel=False)
    with pytest.raises(IngestionError, match="missing signal file"):
        ingest_cohort(str(tmp_path))
