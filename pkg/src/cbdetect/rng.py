"""Deterministic, purpose-tagged random streams.

All randomness in the package flows through a single counter-based
generator (Philox).  Sub-streams are keyed by hashing
(master_seed, purpose_tag, indices), so e.g. the planted signs, the edge
selection and the noise flips of one instance are statistically
independent streams that stay reproducible even if one consumer changes
how much it draws.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

MAX_SEED = 2**64 - 1


def derive_key(master_seed: int, tag: str, *indices: int) -> np.ndarray:
    """128-bit Philox key derived from (master_seed, tag, indices)."""
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<Q", master_seed & MAX_SEED))
    h.update(tag.encode("utf-8"))
    for ix in indices:
        h.update(struct.pack("<q", ix))
    return np.frombuffer(h.digest(), dtype="<u8")


def derive_seed(master_seed: int, tag: str, *indices: int) -> int:
    """Stable 63-bit integer sub-seed (for nested master seeds)."""
    return int(derive_key(master_seed, tag, *indices)[0] & (2**63 - 1))


def substream(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Independent deterministic generator for one purpose tag."""
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, tag, *indices)))
