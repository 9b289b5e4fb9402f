"""Run manifests: the structured sidecar written next to every output set.

The manifest records enough to rerun the job byte-for-byte: tool version,
the verbatim config text, the master seed, grid spacings, tolerance knobs,
wall-clock bounds, the output file list, and any truncation or bias bounds
the estimators reported.  Serialized as JSON, one file per run directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

MANIFEST_NAME = "manifest.json"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass
class RunManifest:
    tool: str
    version: str
    subcommand: str
    config_path: str
    config_text: str
    master_seed: int | None
    n_threads: int
    grid_spacings: tuple
    tolerances: dict = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""
    outputs: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "tool": self.tool,
            "version": self.version,
            "subcommand": self.subcommand,
            "config_path": self.config_path,
            "config_text": self.config_text,
            "master_seed": self.master_seed,
            "n_threads": self.n_threads,
            "grid_spacings": list(self.grid_spacings),
            "tolerances": self.tolerances,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "outputs": self.outputs,
            "bounds": self.bounds,
            "summary": self.summary,
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())


def read_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
