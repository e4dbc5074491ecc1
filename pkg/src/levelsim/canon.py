"""Canonical JSON encoding and stable digests for model-defined values."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from typing import Any


def to_plain(value: Any) -> Any:
    """Convert ``value`` into JSON-compatible data with a deterministic layout.

    Mappings get string keys, sets become sorted lists, tuples become lists and
    dataclasses become dicts of their fields.
    """
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        # repr round-trips exactly; keeps digests platform independent
        return {"__float__": repr(value)}
    if isinstance(value, enum.Enum):
        return to_plain(value.value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value) if f.compare}
    if isinstance(value, dict) or hasattr(value, "items"):
        return {str(k): to_plain(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (set, frozenset)):
        return sorted((to_plain(v) for v in value), key=dumps)
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    raise TypeError(f"cannot canonicalize value of type {type(value).__name__}")


def dumps(plain: Any) -> str:
    return json.dumps(plain, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(value: Any, width: int = 16) -> str:
    """Hex sha256 of the canonical encoding of ``value``, truncated to ``width``."""
    return hashlib.sha256(dumps(to_plain(value)).encode("ascii")).hexdigest()[:width]
