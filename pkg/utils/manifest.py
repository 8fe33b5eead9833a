"""
Run manifests: every stage output directory carries a `run_manifest.json`
naming the command, the effective configuration, the seeds, the hashes of
its inputs and of the files it wrote.
"""
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from config.config import Config
from data_model.errors import UpstreamMismatchError, ValidationError
from utils.file_operations import hash_directory, hash_file, hash_payload, jsonable, load_json, save_json

logger = logging.getLogger(__name__)

RUN_MANIFEST_FILE = "run_manifest.json"


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    tool_version: str = Config.TOOL_VERSION
    started_at: str = field(default_factory=_now)
    finished_at: str = ""

    def add_input(self, name, path):
        """Record an input file or directory by content hash (and its own output digest when it has one)."""
        if os.path.isdir(path):
            entry = {"path": os.path.abspath(path), "digest": hash_payload(hash_directory(path))}
            upstream = load_run_manifest(path)
            if upstream is not None:
                entry["upstream_command"] = upstream.command
                entry["upstream_digest"] = upstream.output_digest
        elif os.path.isfile(path):
            entry = {"path": os.path.abspath(path), "digest": hash_file(path)}
        else:
            raise ValidationError(f"Input '{path}' does not exist")
        self.inputs[name] = entry
        return entry

    @property
    def output_digest(self):
        return hash_payload(self.outputs)

    def finish(self, out_dir):
        """Hash everything written to out_dir, then write the manifest next to it."""
        self.outputs = hash_directory(out_dir)
        self.finished_at = _now()
        save_json(os.path.join(out_dir, RUN_MANIFEST_FILE), self.to_dict())
        logger.info("Wrote %s for '%s' (%d files)", RUN_MANIFEST_FILE, self.command, len(self.outputs))
        return self

    def to_dict(self):
        return jsonable({**asdict(self), "output_digest": self.output_digest})

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**data)


def load_run_manifest(directory):
    data = load_json(os.path.join(directory, RUN_MANIFEST_FILE))
    return None if data is None else RunManifest.from_dict(data)


def verify_upstream(directory, expected_command=None):
    """
    Check that an input directory still holds exactly the files its run manifest recorded.

    Directories without a run manifest (externally supplied cohorts) pass with a
    warning. Raises UpstreamMismatchError when a file was added, removed or
    changed, or when the directory was produced by a different command.
    """
    manifest = load_run_manifest(directory)
    if manifest is None:
        logger.warning("'%s' has no %s; its provenance is not checked", directory, RUN_MANIFEST_FILE)
        return None
    if expected_command and manifest.command != expected_command:
        raise UpstreamMismatchError(
            f"'{directory}' was produced by '{manifest.command}', expected '{expected_command}' output"
        )
    current = hash_directory(directory)
    if current != manifest.outputs:
        changed = sorted(
            name for name in set(current) | set(manifest.outputs) if current.get(name) != manifest.outputs.get(name)
        )
        raise UpstreamMismatchError(
            f"'{directory}' does not match its run manifest; changed files: {', '.join(changed[:5])}"
            + (" ..." if len(changed) > 5 else "")
        )
    return manifest
