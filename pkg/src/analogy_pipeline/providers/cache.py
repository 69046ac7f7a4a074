"""Persistent content-addressed response cache.

Keys are sha256 digests of (model id, rendered prompt or input text,
temperature). Entries live as individual JSON files under a cache directory
so concurrent runs can share one cache; an in-memory layer avoids re-reading.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from pathlib import Path


def cache_key(model_id: str, text: str, temperature: float) -> str:
    payload = json.dumps(
        {"model": model_id, "text": text, "temperature": temperature},
        sort_keys=True,
        ensure_ascii=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Disk-backed cache; set ``root=None`` for a memory-only cache."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, str] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        assert self.root is not None
        return self.root / f"{key}.json"

    def get(self, key: str) -> str | None:
        with self._lock:
            if key in self._memory:
                self.hits += 1
                return self._memory[key]
        if self.root is not None:
            path = self._path(key)
            if path.exists():
                entry = json.loads(path.read_text(encoding="utf-8"))
                with self._lock:
                    self._memory[key] = entry["value"]
                    self.hits += 1
                return entry["value"]
        with self._lock:
            self.misses += 1
        return None

    def set(self, key: str, value: str):
        with self._lock:
            self._memory[key] = value
            if self.root is not None:
                entry = {"key": key, "value": value, "created_at": time.time()}
                tmp = self._path(key).with_suffix(".tmp")
                tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
                tmp.replace(self._path(key))
