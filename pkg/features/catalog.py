import inspect
from dataclasses import dataclass, field

from config.config import Config
from data_model.errors import ValidationError
from features.calculators import CALCULATORS
from utils.file_operations import hash_payload, load_json

# calculators whose cost grows quadratically with the window length
COMPLEXITY_CALCULATORS = ("approximate_entropy", "sample_entropy")


@dataclass(frozen=True)
class CatalogEntry:
    calculator: str
    params: dict = field(default_factory=dict)

    @property
    def family(self):
        return CALCULATORS[self.calculator].family

    def run(self, x, rate_hz):
        return CALCULATORS[self.calculator](x, rate_hz, **self.params)


@dataclass(frozen=True)
class FeatureCatalog:
    """
    Versioned list of enabled feature calculators and their frozen parameters.
    """
    version: str
    entries: tuple
    complexity_max_length: int = 600

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or "features" not in data:
            raise ValidationError("Feature catalog must be an object with a 'features' list")
        max_length = int(data.get("complexity_max_length", 600))
        entries = []
        for item in data["features"]:
            name = item.get("calculator")
            if name not in CALCULATORS:
                raise ValidationError(f"Unknown feature calculator '{name}' in catalog")
            params = dict(item.get("params") or {})
            params = {key: tuple(map(tuple, v)) if key == "ranges" else v for key, v in params.items()}
            if name in COMPLEXITY_CALCULATORS:
                params.setdefault("max_length", max_length)
            try:
                inspect.signature(CALCULATORS[name].func).bind(None, None, **params)
            except TypeError as error:
                raise ValidationError(f"Invalid parameters for calculator '{name}': {error}") from error
            entries.append(CatalogEntry(name, params))
        if not entries:
            raise ValidationError("Feature catalog enables no features")
        return cls(str(data.get("version", "0")), tuple(entries), max_length)

    @classmethod
    def from_file(cls, path=None):
        path = path or Config.FEATURE_CATALOG_PATH
        data = load_json(path)
        if data is None:
            raise ValidationError(f"Feature catalog '{path}' not found")
        return cls.from_dict(data)

    @property
    def families(self):
        return sorted({entry.family for entry in self.entries})

    def to_dict(self):
        return {
            "version": self.version,
            "complexity_max_length": self.complexity_max_length,
            "features": [
                {"calculator": e.calculator, "params": {k: list(v) if isinstance(v, tuple) else v for k, v in e.params.items()}}
                for e in self.entries
            ],
        }

    @property
    def digest(self):
        return hash_payload(self.to_dict())
