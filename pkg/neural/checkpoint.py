"""
Checkpoints: `weights.bin` holds every parameter and buffer as flat
little-endian float32 in state order; `manifest.json` records the layer shapes,
architecture, training config, seed and normalization statistics.
"""
import os

import numpy as np

from config.config import Config
from data_model.errors import ValidationError
from neural.model import TwoTowerCnn
from utils.file_operations import hash_file, load_json, save_json

WEIGHTS_FILE = "weights.bin"
MANIFEST_FILE = "manifest.json"


def save_checkpoint(directory, model, scaler, config=None, extra=None):
    if os.path.exists(os.path.join(directory, WEIGHTS_FILE)):
        raise ValidationError(f"Checkpoint '{directory}' already exists")
    os.makedirs(directory, exist_ok=True)
    state = model.state()
    flat = np.concatenate([tensor.value.astype("<f4").ravel() for _, tensor in state])
    path = os.path.join(directory, WEIGHTS_FILE)
    flat.tofile(path)
    manifest = {
        "tool_version": Config.TOOL_VERSION,
        "architecture": model.architecture(),
        "layers": [{"name": name, "shape": list(tensor.shape)} for name, tensor in state],
        "train_config": config.to_dict() if config is not None else None,
        "seed": model.seed,
        "norm_stats": scaler.to_dict(),
        "weights_sha256": hash_file(path),
    }
    manifest.update(extra or {})
    save_json(os.path.join(directory, MANIFEST_FILE), manifest)
    return manifest


def load_checkpoint(directory):
    """Returns (model, scaler, manifest)."""
    from neural.training import ModalityScaler

    manifest = load_json(os.path.join(directory, MANIFEST_FILE))
    path = os.path.join(directory, WEIGHTS_FILE)
    if manifest is None or not os.path.exists(path):
        raise ValidationError(f"'{directory}' is not a checkpoint directory")
    if hash_file(path) != manifest["weights_sha256"]:
        raise ValidationError(f"Checkpoint weights in '{directory}' do not match their manifest")

    architecture = manifest["architecture"]
    model = TwoTowerCnn(
        head=architecture["head"],
        towers=architecture["towers"],
        input_lengths=architecture["input_lengths"],
        hidden=architecture["hidden"],
        dropout=architecture["dropout"],
        seed=architecture["seed"],
        dtype=architecture["dtype"],
    )
    flat = np.fromfile(path, dtype="<f4")
    expected = sum(int(np.prod(layer["shape"])) for layer in manifest["layers"])
    if flat.size != expected:
        raise ValidationError(f"Checkpoint holds {flat.size} values, manifest declares {expected}")
    state, offset = {}, 0
    for layer in manifest["layers"]:
        size = int(np.prod(layer["shape"]))
        state[layer["name"]] = flat[offset:offset + size].reshape(layer["shape"])
        offset += size
    model.load_state_dict(state)
    return model, ModalityScaler.from_dict(manifest["norm_stats"]), manifest
