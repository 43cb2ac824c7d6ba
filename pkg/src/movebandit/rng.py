"""Named random streams: one root seed, one independent Philox stream per label path.

``stream(seed, "run", 3, "policy")`` always yields the same generator, and
streams with different label paths never overlap.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(label) -> int:
    if isinstance(label, (int, np.integer)) and label >= 0:
        return int(label)
    return zlib.crc32(str(label).encode()) | (1 << 32)


def stream(seed: int, *labels) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(l) for l in labels))
    return np.random.Generator(np.random.Philox(ss))
