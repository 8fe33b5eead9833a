"""
Synthetic three-group cohorts with a planted alcohol effect.

Every participant drives three phases separated by breaks. Treatment
participants are sober in phase 1 and carry a linearly decaying BAC in
phases 2 and 3; placebo and reference participants stay sober on the same
schedule. The effect intensity at time t is min(1, BAC(t) / saturation_bac),
ramped in over `onset_ramp_s` after each phase start, and drives:

    IBI    AR(1) around a mean lowered by `arousal_shift` stationary SDs,
           innovations scaled by (1 - hrv_suppression * intensity)
    HR     60000 / IBI at 1 Hz plus white noise
    accel  low-pass steering noise plus a 2-8 Hz vibration band whose
           amplitude grows by `accel_roughness` at full intensity

The output is exactly the manifest/CSV layout read by data_model.ingest.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.signal import butter, sosfiltfilt

from config.config import Config
from data_model.errors import ValidationError
from data_model.types import Group
from utils.file_operations import load_json, save_json, write_frame

logger = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0
HR_RATE_HZ = 1.0
BAC_FILE = "bac.csv"
CONFIG_FILE = "synth_config.json"
GROUP_PREFIX = {Group.TREATMENT: "T", Group.PLACEBO: "P", Group.REFERENCE: "R"}


@dataclass(frozen=True)
class EffectConfig:
    arousal_shift: float = 1.0
    hrv_suppression: float = 0.5
    accel_roughness: float = 3.0
    accel_level_shift_g: float = 0.0
    onset_ramp_s: float = 60.0
    saturation_bac: float = 0.02

    def scaled(self, scale):
        """Multiply every effect magnitude by `scale`; scale 0 yields the null effect."""
        if scale < 0:
            raise ValidationError(f"Effect scale must be non-negative, got {scale}")
        return replace(
            self,
            arousal_shift=self.arousal_shift * scale,
            hrv_suppression=self.hrv_suppression * scale,
            accel_roughness=1.0 + (self.accel_roughness - 1.0) * scale,
            accel_level_shift_g=self.accel_level_shift_g * scale,
        )

    @property
    def is_null(self):
        return (
            self.arousal_shift == 0
            and self.hrv_suppression == 0
            and self.accel_roughness == 1
            and self.accel_level_shift_g == 0
        )


@dataclass(frozen=True)
class NoiseConfig:
    ibi_mean_ms: float = 800.0
    ibi_between_sd_ms: float = 60.0
    ibi_sd_ms: float = 40.0
    ibi_ar_phi: float = 0.7
    artifact_probability: float = 0.002
    hr_noise_bpm: float = 1.0
    steering_g: float = 0.05
    vibration_g: float = 0.02
    sensor_noise_g: float = 0.005


@dataclass(frozen=True)
class SynthConfig:
    n_treatment: int = 12
    n_placebo: int = 5
    n_reference: int = 5
    phase_duration_s: float = 600.0
    break_duration_s: float = 900.0
    margin_s: float = 60.0
    severe_bac_range: tuple = (0.054, 0.086)
    moderate_bac_range: tuple = (0.014, 0.044)
    decay_per_hour: float = 0.015
    effect: EffectConfig = field(default_factory=EffectConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0

    def __post_init__(self):
        for name in ("n_treatment", "n_placebo", "n_reference"):
            if int(getattr(self, name)) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if self.n_treatment + self.n_placebo + self.n_reference == 0:
            raise ValidationError("A cohort needs at least one participant")
        if self.phase_duration_s <= 0 or self.break_duration_s < 0 or self.margin_s < 0:
            raise ValidationError("Phase duration must be positive; break and margin non-negative")
        if self.decay_per_hour < 0:
            raise ValidationError("decay_per_hour must be non-negative")
        if self.effect.saturation_bac <= 0 or self.effect.onset_ramp_s < 0:
            raise ValidationError("saturation_bac must be positive and onset_ramp_s non-negative")
        if not 0 <= self.effect.hrv_suppression < 1 or self.effect.accel_roughness < 0:
            raise ValidationError("hrv_suppression must lie in [0, 1) and accel_roughness be non-negative")
        if not -1 < self.noise.ibi_ar_phi < 1:
            raise ValidationError("ibi_ar_phi must lie in (-1, 1)")
        for name in ("severe_bac_range", "moderate_bac_range"):
            low, high = getattr(self, name)
            if not 0 <= low <= high:
                raise ValidationError(f"{name} must satisfy 0 <= low <= high")
            if low + self.phase_decay > high:
                raise ValidationError(f"{name} is narrower than the BAC decay over one phase ({self.phase_decay:.4f})")

    @property
    def phase_decay(self):
        return self.decay_per_hour * self.phase_duration_s / SECONDS_PER_HOUR

    @property
    def total_duration_s(self):
        return 2 * self.margin_s + 3 * self.phase_duration_s + 2 * self.break_duration_s

    def phase_bounds(self):
        """[(index, start_s, end_s)] of the three driving phases."""
        bounds = []
        start = self.margin_s
        for index in (1, 2, 3):
            bounds.append((index, start, start + self.phase_duration_s))
            start += self.phase_duration_s + self.break_duration_s
        return bounds

    @classmethod
    def desk_scale(cls, **overrides):
        """The default 12 treatment / 5 placebo / 5 reference cohort with 10-minute phases."""
        return cls(**overrides)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"Unknown synth config keys: {', '.join(sorted(unknown))}")
        try:
            if "effect" in data:
                data["effect"] = EffectConfig(**data["effect"])
            if "noise" in data:
                data["noise"] = NoiseConfig(**data["noise"])
        except TypeError as e:
            raise ValidationError(f"Invalid synth config: {e}")
        for name in ("severe_bac_range", "moderate_bac_range"):
            if name in data:
                data[name] = tuple(float(v) for v in data[name])
        return cls(**data)

    @classmethod
    def from_file(cls, path=None):
        path = path or Config.SYNTH_DESK_PATH
        data = load_json(path)
        if data is None:
            raise ValidationError(f"Synth config file '{path}' not found")
        return cls.from_dict(data)

    def to_dict(self):
        data = asdict(self)
        data["severe_bac_range"] = list(self.severe_bac_range)
        data["moderate_bac_range"] = list(self.moderate_bac_range)
        return data


def participant_plan(config):
    """[(participant_id, group)] in manifest order: treatment, placebo, reference."""
    plan = []
    for group, count in (
        (Group.TREATMENT, config.n_treatment),
        (Group.PLACEBO, config.n_placebo),
        (Group.REFERENCE, config.n_reference),
    ):
        plan.extend((f"{GROUP_PREFIX[group]}{i + 1:02d}", group) for i in range(int(count)))
    return plan


def breath_tests(config, group, rng):
    """
    BAC readings at every phase start and end.

    Treatment phase starts are drawn so that the value after one phase of
    linear decay still lies inside the configured range.
    """
    tests = []
    for index, start, end in config.phase_bounds():
        if group is Group.TREATMENT and index > 1:
            low, high = config.severe_bac_range if index == 2 else config.moderate_bac_range
            initial = rng.uniform(low + config.phase_decay, high)
        else:
            initial = 0.0
        tests.append((start, round(initial, 6)))
        tests.append((end, round(max(initial - config.phase_decay, 0.0), 6)))
    return tests


def effect_intensity(t, tests, config):
    """Effect intensity in [0, 1] at times t (s)."""
    t = np.asarray(t, dtype=float)
    times, values = zip(*tests)
    bac = np.interp(t, times, values)
    intensity = np.clip(bac / config.effect.saturation_bac, 0.0, 1.0)
    if config.effect.onset_ramp_s > 0:
        starts = np.array([start for _, start, _ in config.phase_bounds()])
        latest = np.searchsorted(starts, t, side="right") - 1
        elapsed = np.where(latest >= 0, t - starts[np.clip(latest, 0, None)], 0.0)
        intensity = intensity * np.clip(elapsed / config.effect.onset_ramp_s, 0.0, 1.0)
    return intensity


def simulate_ibi(config, intensity_at, rng):
    """
    Beat-by-beat AR(1) inter-beat intervals over the whole session.

    Returns (beat_times_s, clean_ibi_ms, observed_ibi_ms); the observed series
    carries rare missed/extra-beat artifacts.
    """
    noise = config.noise
    effect = config.effect
    baseline = max(rng.normal(noise.ibi_mean_ms, noise.ibi_between_sd_ms), 450.0)
    phi = noise.ibi_ar_phi
    innovation_sd = noise.ibi_sd_ms * np.sqrt(1.0 - phi**2)

    total = config.total_duration_s
    times, clean = [], []
    t, deviation = 0.0, 0.0
    while True:
        intensity = float(intensity_at(t))
        deviation = phi * deviation + innovation_sd * (1.0 - effect.hrv_suppression * intensity) * rng.standard_normal()
        ibi = max(baseline - effect.arousal_shift * noise.ibi_sd_ms * intensity + deviation, 350.0)
        t += ibi / 1000.0
        if t > total:
            break
        times.append(t)
        clean.append(ibi)

    times = np.asarray(times)
    clean = np.asarray(clean)
    observed = clean.copy()
    artifacts = rng.random(clean.size) < noise.artifact_probability
    observed[artifacts] *= rng.choice((0.4, 1.9), size=int(artifacts.sum()))
    return times, clean, observed


def simulate_hr(config, beat_times, clean_ibi, rng):
    """1 Hz heart rate from the interval covering each sample."""
    timestamps = np.arange(0.0, config.total_duration_s, 1.0 / HR_RATE_HZ)
    index = np.clip(np.searchsorted(beat_times, timestamps, side="left"), 0, clean_ibi.size - 1)
    hr = 60000.0 / clean_ibi[index] + rng.normal(0.0, config.noise.hr_noise_bpm, timestamps.size)
    return timestamps, hr


def _unit_noise(sos, size, rng):
    filtered = sosfiltfilt(sos, rng.standard_normal(size))
    return filtered / filtered.std()


def simulate_accel(config, intensity, rng):
    """
    Three-axis wrist acceleration at the accelerometer rate.

    `intensity` is the effect intensity sampled on the same grid.
    """
    rate = Config.ACCEL_RATE_HZ
    size = intensity.size
    noise = config.noise
    steering_sos = butter(4, 0.5, btype="low", fs=rate, output="sos")
    vibration_sos = butter(4, (2.0, 8.0), btype="band", fs=rate, output="sos")
    vibration_gain = 1.0 + (config.effect.accel_roughness - 1.0) * intensity

    axes = []
    for _ in range(3):
        steering = noise.steering_g * _unit_noise(steering_sos, size, rng)
        vibration = noise.vibration_g * vibration_gain * _unit_noise(vibration_sos, size, rng)
        axes.append(steering + vibration + rng.normal(0.0, noise.sensor_noise_g, size))
    axes[2] = axes[2] + 1.0 + config.effect.accel_level_shift_g * intensity
    return axes


def generate_participant(config, participant_id, group, seed_sequence, out_dir):
    """
    Simulate one participant and write its signal CSVs.

    Returns (manifest entry, BAC rows).
    """
    rng = np.random.default_rng(seed_sequence)
    tests = breath_tests(config, group, rng)

    def intensity_at(t):
        return effect_intensity(t, tests, config)

    beat_times, clean_ibi, observed_ibi = simulate_ibi(config, intensity_at, rng)
    hr_times, hr = simulate_hr(config, beat_times, clean_ibi, rng)
    accel_times = np.arange(int(config.total_duration_s * Config.ACCEL_RATE_HZ)) / Config.ACCEL_RATE_HZ
    x, y, z = simulate_accel(config, intensity_at(accel_times), rng)

    files = {
        "ibi": f"{participant_id}_ibi.csv",
        "hr": f"{participant_id}_hr.csv",
        "accel": f"{participant_id}_accel.csv",
    }
    write_frame(pd.DataFrame({"t_s": beat_times, "value": observed_ibi}), os.path.join(out_dir, files["ibi"]))
    write_frame(pd.DataFrame({"t_s": hr_times, "value": hr}), os.path.join(out_dir, files["hr"]))
    write_frame(pd.DataFrame({"t_s": accel_times, "x_g": x, "y_g": y, "z_g": z}), os.path.join(out_dir, files["accel"]))

    entry = {
        "id": participant_id,
        "group": str(group),
        "phases": [
            {"index": index, "start_s": start, "end_s": end, "scenarios": []}
            for index, start, end in config.phase_bounds()
        ],
        "files": files,
    }
    bac_rows = [
        {"participant_id": participant_id, "t_s": t, "bac_g_per_dl": bac, "brac_mg_per_l": bac / Config.BRAC_TO_BAC_FACTOR}
        for t, bac in tests
    ]
    logger.debug("Generated %s (%s): %d beats", participant_id, group, beat_times.size)
    return entry, bac_rows


def _generate_job(args):
    return generate_participant(*args)


def generate_cohort(config, out_dir, threads=None):
    """
    Write a synthetic cohort (manifest.json, bac.csv, per-participant CSVs and
    synth_config.json) to out_dir.

    Each participant draws from its own child of SeedSequence(config.seed), so
    parallel generation writes the same bytes as serial generation.

    Returns:
        dict: the written manifest.
    """
    threads = threads or Config.THREADS
    plan = participant_plan(config)
    os.makedirs(out_dir, exist_ok=True)
    seeds = np.random.SeedSequence(config.seed).spawn(len(plan))
    jobs = [(config, participant_id, group, seed, out_dir) for (participant_id, group), seed in zip(plan, seeds)]

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(_generate_job, jobs))
    else:
        results = [_generate_job(job) for job in jobs]

    entries = [entry for entry, _ in results]
    bac_rows = [row for _, rows in results for row in rows]
    write_frame(
        pd.DataFrame(bac_rows, columns=["participant_id", "t_s", "bac_g_per_dl", "brac_mg_per_l"]),
        os.path.join(out_dir, BAC_FILE),
    )
    manifest = {"participants": entries, "bac_file": BAC_FILE}
    save_json(os.path.join(out_dir, "manifest.json"), manifest)
    save_json(os.path.join(out_dir, CONFIG_FILE), config.to_dict())
    logger.info(
        "Generated %d participants (%d treatment, %d placebo, %d reference) in %s",
        len(plan),
        config.n_treatment,
        config.n_placebo,
        config.n_reference,
        out_dir,
    )
    return manifest
