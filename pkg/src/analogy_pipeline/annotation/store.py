"""Durable submission storage: append-only journal, last-write-wins reads.

Every registration and submission appends one JSON line; the in-memory view
is rebuilt from the journal on startup, so a service restart loses nothing.
Resubmitting a (annotator, task) pair replaces the earlier submission in the
materialized view while the journal keeps the full history for audit.
"""

from __future__ import annotations

import json
import secrets
import string
import threading
import time
from pathlib import Path

from .models import AnnotationSubmission

_ID_ALPHABET = string.ascii_uppercase + string.digits


class SubmissionStore:
    def __init__(self, journal_path: str | Path):
        self.journal_path = Path(journal_path)
        self._lock = threading.Lock()
        self._annotators: set[str] = set()
        self._submissions: dict[tuple[str, str], AnnotationSubmission] = {}
        self._replay()

    def _replay(self):
        if not self.journal_path.exists():
            return
        with self.journal_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                if entry["type"] == "annotator":
                    self._annotators.add(entry["annotator_id"])
                elif entry["type"] == "submission":
                    sub = AnnotationSubmission.model_validate(entry["payload"])
                    self._submissions[(sub.annotator_id, sub.task_id)] = sub

    def _append(self, entry: dict):
        self.journal_path.parent.mkdir(parents=True, exist_ok=True)
        with self.journal_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()

    def register_annotator(self) -> str:
        with self._lock:
            while True:
                annotator_id = "ANN-" + "".join(
                    secrets.choice(_ID_ALPHABET) for _ in range(6)
                )
                if annotator_id not in self._annotators:
                    break
            self._annotators.add(annotator_id)
            self._append(
                {"type": "annotator", "annotator_id": annotator_id, "created_at": time.time()}
            )
            return annotator_id

    def is_registered(self, annotator_id: str) -> bool:
        with self._lock:
            return annotator_id in self._annotators

    def submit(self, submission: AnnotationSubmission) -> bool:
        """Store one submission; returns True when it replaced an earlier one."""
        key = (submission.annotator_id, submission.task_id)
        with self._lock:
            replaced = key in self._submissions
            self._submissions[key] = submission
            self._append(
                {
                    "type": "submission",
                    "payload": submission.model_dump(),
                    "submitted_at": time.time(),
                }
            )
            return replaced

    def submissions(self) -> list[AnnotationSubmission]:
        with self._lock:
            return [self._submissions[k] for k in sorted(self._submissions)]

    def completed_tasks(self, annotator_id: str) -> set[str]:
        with self._lock:
            return {task for ann, task in self._submissions if ann == annotator_id}

    def annotators_with_submissions(self) -> list[str]:
        with self._lock:
            return sorted({ann for ann, _ in self._submissions})

    def count(self) -> int:
        with self._lock:
            return len(self._submissions)
