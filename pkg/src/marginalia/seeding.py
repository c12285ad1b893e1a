"""Deterministic, platform-stable randomness plumbing.

All randomness in the pipeline flows from one corpus seed. Per-item seeds
are derived by hashing the corpus seed together with stable identifiers
(page ids, candidate keys), via SHA-256, so results do not depend on
process hash randomization, platform, or library version. Shuffles are
implemented as orderings by keyed hash for the same reason.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def derive_seed(*parts) -> int:
    """64-bit seed from hashing the string forms of ``parts`` together."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _MASK64


def hash_key(*parts) -> bytes:
    """Stable 32-byte sort key for the given parts."""
    text = ":".join(str(p) for p in parts)
    return hashlib.sha256(text.encode("utf-8")).digest()


def keyed_shuffle(items, seed: int, key=lambda item: item):
    """Return ``items`` in a deterministic pseudo-random order under ``seed``.

    Equivalent to shuffling with a seeded RNG, but reproducible across
    platforms and Python versions. ``key`` must map each item to a stable,
    unique identifier.
    """
    return sorted(items, key=lambda item: hash_key(seed, key(item)))


def unit_float(*parts) -> float:
    """Deterministic float in [0, 1) derived from the given parts."""
    return derive_seed(*parts) / float(1 << 64)
