"""Counter-based random streams.

Every stochastic task derives its own generator from
(master seed, module tag, counters...) so that chunked or parallel
execution order can never change the drawn values.
"""

import zlib

import numpy as np

TAG_CHANNEL = zlib.crc32(b"channel")
TAG_SIMULATE = zlib.crc32(b"simulate")
TAG_SOLVER = zlib.crc32(b"singleletter")
TAG_ORACLE = zlib.crc32(b"multiletter")


def derive_rng(seed: int, tag: int, *counters: int) -> np.random.Generator:
    """Return a PCG64 generator keyed by (seed, tag, counters)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(tag)] + [int(c) for c in counters]
    return np.random.default_rng(np.random.SeedSequence(entropy))
