"""Stable hashing helpers.

Seeds derived here must be identical across processes and Python versions,
so everything goes through sha256 rather than the builtin hash().
"""

from __future__ import annotations

import hashlib


def stable_u64(*parts) -> int:
    """Hash the given parts into an unsigned 64-bit integer.

    Parts are joined with a separator that cannot appear in the decimal or
    canonical-string renderings used by callers, so distinct part tuples
    cannot collide by concatenation.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stable_unit(*parts) -> float:
    """Hash the given parts into a float in [0, 1]."""
    return stable_u64(*parts) / float(2**64 - 1)


def stable_tag(*parts) -> str:
    """Short hex tag identifying a part tuple; used to stamp log records."""
    text = "\x1f".join(str(p) for p in parts)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
