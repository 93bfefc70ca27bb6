"""Shared helpers: hashing, canonical JSON, and a pinnable clock."""

from __future__ import annotations

import hashlib
import json
import os
import time

# Set to an epoch-seconds value to make created_at timestamps reproducible
# (two identical runs must produce byte-identical outputs).
FIXED_NOW_ENV = "CLONEAUDIT_FIXED_NOW"


def now() -> float:
    pinned = os.environ.get(FIXED_NOW_ENV)
    if pinned is not None:
        return float(pinned)
    return time.time()


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace, for hashing."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def short_id(*parts) -> str:
    """Deterministic 16-hex-char id derived from the given parts."""
    joined = "\x1f".join(str(p) for p in parts)
    return hashlib.sha1(joined.encode("utf-8")).hexdigest()[:16]
