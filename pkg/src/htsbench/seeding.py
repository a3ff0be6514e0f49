"""Deterministic seed derivation for named random substreams.

Seeds are pure functions of string/integer keys, independent of process,
platform, and iteration order (``hash()`` is salted, so it is never used).
"""

from __future__ import annotations

import hashlib

import numpy as np


def hash64(text: str) -> int:
    """Stable 64-bit digest of a string."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_seed(master_seed: int, *parts: object) -> int:
    """Derive a 64-bit seed from a master seed and a sequence of key parts."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed)).encode("utf-8"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def substream(seed: int, *keys: object) -> np.random.Generator:
    """Independent generator for (seed, keys); strings are hashed stably."""
    entropy = [int(seed)]
    for key in keys:
        entropy.append(key if isinstance(key, int) else hash64(str(key)))
    return np.random.default_rng(np.random.SeedSequence(entropy))
