import logging
from dataclasses import dataclass

import numpy as np

from config.config import Config
from data_model.errors import ValidationError

logger = logging.getLogger(__name__)

MIN_PARTICIPANTS = 12
ABSOLUTE_MIN_PARTICIPANTS = 4


@dataclass(frozen=True)
class LosoFold:
    held_out: str
    train: tuple
    validation: tuple

    def to_dict(self):
        return {"held_out": self.held_out, "train": list(self.train), "validation": list(self.validation)}


@dataclass(frozen=True)
class LosoPlan:
    folds: tuple
    seed: int
    validation_size: int

    def __len__(self):
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)

    def to_dict(self):
        return {"seed": self.seed, "validation_size": self.validation_size, "folds": [f.to_dict() for f in self.folds]}


def validation_size_for(remainder):
    """
    10 validation participants whenever at least as many remain for training,
    else max(2, 20% of the remainder).
    """
    if remainder >= 2 * Config.VALIDATION_PARTICIPANTS:
        return Config.VALIDATION_PARTICIPANTS
    return max(Config.MIN_VALIDATION_PARTICIPANTS, int(np.floor(0.2 * remainder)))


def make_loso_plan(cohort, seed=None):
    """
    One fold per participant. Validation participants are drawn without
    replacement from the remaining participants with a per-fold seeded generator.

    Parameters:
        cohort: a Cohort or an ordered sequence of participant ids.
        seed (int): root seed; the same seed yields the same plan.
    """
    ids = list(cohort.participant_ids) if hasattr(cohort, "participant_ids") else [str(p) for p in cohort]
    if len(set(ids)) != len(ids):
        raise ValidationError("Participant ids must be unique")
    if len(ids) < ABSOLUTE_MIN_PARTICIPANTS:
        raise ValidationError(f"LOSO needs at least {ABSOLUTE_MIN_PARTICIPANTS} participants, got {len(ids)}")
    if len(ids) < MIN_PARTICIPANTS:
        logger.warning("Only %d participants; LOSO validation splits will be very small", len(ids))

    seed = Config.ROOT_SEED if seed is None else int(seed)
    size = validation_size_for(len(ids) - 1)
    if size != Config.VALIDATION_PARTICIPANTS:
        logger.warning("Too few participants for %d validation participants; using %d per fold", Config.VALIDATION_PARTICIPANTS, size)

    folds = []
    for held_out, child in zip(ids, np.random.SeedSequence(seed).spawn(len(ids))):
        remainder = [p for p in ids if p != held_out]
        rng = np.random.default_rng(child)
        chosen = set(rng.choice(len(remainder), size=size, replace=False).tolist())
        validation = tuple(p for i, p in enumerate(remainder) if i in chosen)
        train = tuple(p for i, p in enumerate(remainder) if i not in chosen)
        folds.append(LosoFold(held_out, train, validation))
    return LosoPlan(tuple(folds), seed, size)
