"""Canonical JSON encodings and content digests shared across the toolkit.

Two encodings exist on purpose: `wire_json` keeps insertion order and is
what NDJSON files and HTTP bodies carry; `canonical_json` sorts keys and
is the only form that ever gets hashed.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def wire_json(obj: Any) -> str:
    """Compact JSON preserving dict insertion order."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def canonical_json(obj: Any) -> str:
    """Compact JSON with lexicographically sorted keys."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest(obj: Any) -> str:
    """SHA-256 over the canonical JSON encoding of `obj`."""
    return sha256_hex(canonical_json(obj).encode("utf-8"))
