"""Deterministic 64-bit seed derivation for per-item randomness."""

from __future__ import annotations

import hashlib


def derive_seed(run_seed: int, *parts: str) -> int:
    """Derive a 64-bit seed from a run seed and identifying string parts.

    Stable across processes and platforms, so any per-item decision keyed on
    the result is reproducible regardless of scheduling or worker count.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(run_seed)).encode("utf-8"))
    for part in parts:
        h.update(b"\x00")
        h.update(part.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")
