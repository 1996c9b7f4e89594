"""Seeded counter-based random number streams.

Every stochastic routine in the package takes an explicit numpy Generator.
Philox is a named 64-bit counter-based generator, so a recorded seed
reproduces a run bit-exactly on any platform.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator for an explicit integer seed."""
    return np.random.Generator(np.random.Philox(seed))


def spawn(seed: int, stream: int) -> np.random.Generator:
    """Independent substream `stream` of the experiment seeded by `seed`."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ (np.uint64(stream) << np.uint64(20))))
