import os
import json
import hashlib
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

from infra.storage import write_json

TOOL_VERSION = "1.0.0"


def file_sha256(filepath: str) -> str:
    """Calculates SHA-256 hash of a file, optimized for large files."""
    sha256_hash = hashlib.sha256()
    with open(filepath, "rb") as f:
        # Read in 1MB chunks to keep the Python loop overhead low on large dumps
        for byte_block in iter(lambda: f.read(1048576), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


def spec_hash(mapping: dict) -> str:
    canonical = json.dumps(mapping, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    input_hashes: dict = field(default_factory=dict)
    output_hashes: dict = field(default_factory=dict)
    tool_version: str = TOOL_VERSION
    started_at: str = field(default_factory=_now)
    finished_at: str | None = None

    @property
    def config_hash(self) -> str:
        return spec_hash(self.config)

    def add_input(self, path: str) -> None:
        """Keyed by the path as given."""
        if path and os.path.isfile(path):
            self.input_hashes[path] = file_sha256(path)

    def add_output(self, path: str) -> None:
        if path and os.path.isfile(path):
            self.output_hashes[path] = file_sha256(path)

    def write(self, output_path: str) -> str:
        """Writes ``<output>.run.json`` next to the primary output and returns its path."""
        self.finished_at = _now()
        data = asdict(self)
        data.pop("config")
        data["config_hash"] = self.config_hash
        manifest_path = output_path.rstrip("/\\") + ".run.json"
        write_json(manifest_path, data)
        return manifest_path
