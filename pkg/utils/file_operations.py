import hashlib
import json
import logging
import os
import shutil

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.8f"


# JSON helpers
def save_json(path, data):
    """
    Write data as indented JSON with sorted keys so re-runs produce identical bytes.
    Parent directories are created when missing.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        json.dump(data, file, indent=4, sort_keys=True)
        file.write("\n")


def load_json(path):
    """
    Load a JSON file. Returns None if the file does not exist.
    """
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as file:
        return json.load(file)


# Output directories
def prepare_output_dir(path, force=False):
    """
    Return the directory a stage should write to.

    Stage outputs are immutable: an existing non-empty directory is only reused
    when force is set (its contents are removed first); otherwise the next free
    sibling `<path>-1`, `<path>-2`, ... is created.
    """
    path = os.path.normpath(path)
    if os.path.isdir(path) and os.listdir(path):
        if force:
            shutil.rmtree(path)
        else:
            suffix = 1
            while os.path.exists(f"{path}-{suffix}") and os.listdir(f"{path}-{suffix}"):
                suffix += 1
            new_path = f"{path}-{suffix}"
            logger.warning("Output directory %s exists; writing to %s instead (use --force to overwrite)", path, new_path)
            path = new_path
    os.makedirs(path, exist_ok=True)
    return path


# Hashing
def hash_file(path, chunk_size=1 << 20):
    """
    SHA-256 hex digest of a file's bytes.
    """
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_directory(path, exclude=("run_manifest.json",)):
    """
    Map every file below path (relative, '/'-separated) to its SHA-256, skipping excluded names.
    """
    hashes = {}
    for root, _, files in os.walk(path):
        for name in sorted(files):
            if name in exclude:
                continue
            file_path = os.path.join(root, name)
            if os.path.islink(file_path):
                logger.warning("Skipping symlinked file '%s'", file_path)
                continue
            relative_path = os.path.relpath(file_path, path).replace(os.sep, "/")
            hashes[relative_path] = hash_file(file_path)
    return dict(sorted(hashes.items()))


def hash_payload(data):
    """SHA-256 of a JSON-serializable object in canonical form."""
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


# CSV helpers
def write_frame(frame, path, float_format=FLOAT_FORMAT):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n")


def write_series_csv(series, path, float_format=FLOAT_FORMAT):
    """Write a SampleSeries as a `t_s,value` CSV."""
    write_frame(pd.DataFrame({"t_s": series.timestamps, "value": series.values}), path, float_format)


def copy_file(source, destination):
    os.makedirs(os.path.dirname(os.path.abspath(destination)), exist_ok=True)
    shutil.copyfile(source, destination)


def jsonable(value):
    """Convert numpy scalars and containers to plain JSON types; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    return value
