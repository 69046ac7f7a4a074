"""Task set loading; the default study set ships as a package asset."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .models import AnnotationTask


def load_tasks(path: str | Path) -> list[AnnotationTask]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    tasks = [AnnotationTask.model_validate(entry) for entry in data]
    ids = [t.task_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("task ids must be unique")
    return tasks


def default_tasks() -> list[AnnotationTask]:
    """The built-in study set: 15 targets across five domains, 3 candidates each."""
    raw = (
        resources.files("analogy_pipeline")
        .joinpath("annotation/assets/default_tasks.json")
        .read_text(encoding="utf-8")
    )
    return [AnnotationTask.model_validate(entry) for entry in json.loads(raw)]
