"""
Seeded RNG derivation.

Independent random streams are derived from a global seed plus string or
integer keys (image id, parameter name, repetition ...), so parallel
workers never share a generator and results do not depend on scheduling.
"""
import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _stable_key(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key)


def derive_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Generator for the stream identified by (seed, *keys)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_stable_key(k) for k in keys))
    return np.random.default_rng(sequence)


def derive_seed(seed: int, *keys: Key) -> int:
    """Plain integer seed for the stream identified by (seed, *keys)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_stable_key(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
