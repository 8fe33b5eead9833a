from .generator import EffectConfig, NoiseConfig, SynthConfig, generate_cohort, participant_plan
from .sweep import EFFECT_SWEEP_COLUMNS, effect_sweep
