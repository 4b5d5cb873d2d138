"""Seedable, splittable random streams.

Every random draw in the toolkit comes from a stream addressed by a root
seed plus a path of purpose labels and indices, e.g.
``stream(7, "shuffle", epoch)``.  Streams with different paths are
statistically independent, and the same (seed, path) always yields the
same generator, which makes whole experiments bit-reproducible while
keeping e.g. data generation independent of shuffling order.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream", "child_seed"]


def _key_part(part: int | str) -> int:
    if isinstance(part, str):
        # crc32 is stable across platforms and Python versions, unlike hash().
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    raise TypeError(f"stream path parts must be int or str, got {type(part)!r}")


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Return a fresh generator for the stream addressed by (seed, path)."""
    key = tuple(_key_part(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def child_seed(seed: int, *path: int | str) -> int:
    """Derive a new 63-bit integer seed from (seed, path)."""
    key = tuple(_key_part(p) for p in path)
    state = np.random.SeedSequence(entropy=int(seed), spawn_key=key).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
