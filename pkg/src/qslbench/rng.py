"""Deterministic random substreams.

Every stochastic component draws from a stream derived from (master seed,
path), where the path is a sequence of small ints and short strings (e.g.
("train", rep, instance)). Streams for distinct paths are independent and
do not depend on the order in which they are created, so parallel dataset
generation is schedule-independent.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _encode(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("path ints must be non-negative")
        return int(part)
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"unsupported path element {part!r}")


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for (seed, *path); pure function of its arguments."""
    entropy = [_encode(seed)] + [_encode(p) for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def as_generator(rng) -> np.random.Generator:
    """Accept either a Generator or a plain integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return substream(int(rng))
    raise TypeError(f"expected Generator or int seed, got {type(rng).__name__}")
