"""Keyed, reproducible random streams.

Every stochastic component draws from its own generator derived from the run
seed plus a string key. Streams are independent of each other and of the order
in which other streams are consumed, which is what makes paired
(common-random-number) estimator comparisons possible: two runs that request
the same (seed, key) see the identical draw sequence.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *key: object) -> np.random.Generator:
    """Return a Generator for the stream identified by ``seed`` and ``key``.

    Key parts may be strings or integers; strings are hashed with crc32 so the
    derivation is stable across processes and Python versions.
    """
    words = [int(seed) & 0xFFFFFFFF]
    for part in key:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")))
        else:
            words.append(int(part) & 0xFFFFFFFF)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
