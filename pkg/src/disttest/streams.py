"""Seeded random streams.

A stream is a :class:`numpy.random.Generator` over PCG64 (128-bit state,
seeded from a 64-bit value). Per-trial streams are split off a master seed
with :class:`numpy.random.SeedSequence` spawning, so trial ``k`` of a run
sees the same stream no matter how trials are scheduled.
"""

from __future__ import annotations

import numpy as np

RandomStream = np.random.Generator


def make_rng(seed: int | None) -> RandomStream:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, count: int) -> list[RandomStream]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def as_rng(rng: RandomStream | int | None) -> RandomStream:
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(rng)
