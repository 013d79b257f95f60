"""Deterministic, platform-independent seed derivation.

All stochastic steps (padding, random rankings, hash splits) draw from
numpy's PCG64 generator seeded through :func:`derive_seed`, so a run is
reproducible bit-for-bit across platforms and independent of process state.
The derivation is SHA-256 over the stringified parts joined with an
unambiguous separator; the first 8 bytes (big-endian) become the seed.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def derive_seed(*parts: object) -> int:
    """Map a tuple of labels (ints, strings) to a stable 64-bit seed."""
    h = hashlib.sha256(_SEP.join(str(p).encode("utf-8") for p in parts))
    return int.from_bytes(h.digest()[:8], "big")


def rng_for(*parts: object) -> np.random.Generator:
    """Independent PCG64 substream keyed by the given labels."""
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))


def stable_fraction(*parts: object) -> float:
    """Uniform-looking value in [0, 1) derived from the labels.

    Used for deterministic hash splits: the same inputs always land on the
    same side of a threshold, on every platform.
    """
    return derive_seed(*parts) / 2.0**64
