"""Run manifest: config snapshot, per-stage artifacts, timings, versions."""

from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__


@dataclass
class RunManifest:
    run_id: str
    config_snapshot: dict
    stages: dict[str, dict] = field(default_factory=dict)
    versions: dict = field(default_factory=dict)
    extras: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.versions:
            self.versions = {
                "analogy_pipeline": __version__,
                "python": platform.python_version(),
            }

    def add_stage(self, name: str, artifacts: list[str | Path], seconds: float):
        self.stages[name] = {
            "artifacts": [str(a) for a in artifacts],
            "seconds": round(seconds, 3),
        }

    def artifact(self, stage: str, suffix: str) -> Path | None:
        entry = self.stages.get(stage)
        if not entry:
            return None
        for candidate in entry["artifacts"]:
            if candidate.endswith(suffix):
                return Path(candidate)
        return None

    def all_artifacts(self) -> list[str]:
        return [a for entry in self.stages.values() for a in entry["artifacts"]]

    def save(self, path: str | Path):
        payload = {
            "run_id": self.run_id,
            "config_snapshot": self.config_snapshot,
            "stages": self.stages,
            "versions": self.versions,
            "extras": self.extras,
        }
        Path(path).write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            run_id=data["run_id"],
            config_snapshot=data["config_snapshot"],
            stages=data["stages"],
            versions=data["versions"],
            extras=data.get("extras", {}),
        )
