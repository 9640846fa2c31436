"""Content-addressed, on-disk memoization of LLM-derived features.

Layout: ``<root>/<operation>/<digest>.json``.  Keys never involve wall-clock
time, so reruns over unchanged inputs are pure cache hits.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from collections.abc import Callable
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FeatureCacheKey:
    template_version: str
    operation: str
    input_digest: str
    model_id: str

    @classmethod
    def for_prompt(cls, operation: str, prompt: str, model_id: str, template_version: str) -> FeatureCacheKey:
        return cls(template_version, operation, text_digest(prompt), model_id)

    @property
    def digest(self) -> str:
        parts = [self.template_version, self.operation, self.input_digest, self.model_id]
        return text_digest("\x1f".join(parts))

    def to_dict(self) -> dict[str, str]:
        return {
            "template_version": self.template_version,
            "operation": self.operation,
            "input_digest": self.input_digest,
            "model_id": self.model_id,
        }


class CacheError(OSError):
    pass


# A producer returns the raw completion and the parsed, JSON-able value.
Producer = Callable[[], tuple[str, Any]]


class FeatureCache:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._write_lock = threading.Lock()
        self._stats_lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def path_for(self, key: FeatureCacheKey) -> Path:
        return self.root / key.operation / f"{key.digest}.json"

    def _count(self, hit: bool) -> None:
        with self._stats_lock:
            if hit:
                self.hits += 1
            else:
                self.misses += 1

    def lookup(self, key: FeatureCacheKey) -> dict[str, Any] | None:
        path = self.path_for(key)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        except OSError as exc:
            raise CacheError(f"cannot read cache entry {path}: {exc}") from exc
        try:
            entry = json.loads(raw)
            if entry["key"] != key.to_dict() or "value" not in entry:
                raise ValueError("key mismatch")
        except (ValueError, KeyError, TypeError) as exc:
            logger.warning("ignoring corrupt cache entry %s (%s)", path, exc)
            return None
        return entry

    def store(self, key: FeatureCacheKey, raw: str, value: Any) -> None:
        entry = {
            "key": key.to_dict(),
            "raw_completion": raw,
            "value": value,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        path = self.path_for(key)
        with self._write_lock:
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
                try:
                    with os.fdopen(fd, "w", encoding="utf-8") as fh:
                        json.dump(entry, fh, ensure_ascii=False, indent=2, sort_keys=True)
                    os.replace(tmp, path)
                except BaseException:
                    Path(tmp).unlink(missing_ok=True)
                    raise
            except OSError as exc:
                raise CacheError(f"cannot write cache entry {path}: {exc}") from exc

    def memoize(self, key: FeatureCacheKey, producer: Producer) -> Any:
        entry = self.lookup(key)
        if entry is not None:
            self._count(hit=True)
            return entry["value"]
        self._count(hit=False)
        raw, value = producer()
        self.store(key, raw, value)
        return value


def memoize_feature(cache: FeatureCache, key: FeatureCacheKey, producer: Producer) -> Any:
    return cache.memoize(key, producer)
