"""Seed derivation.

All randomness comes from one integer seed. Streams are addressed by a
path below the root, ``SeedSequence(seed, spawn_key=path)``, so any unit's
stream can be rebuilt without replaying the others. Path components are
integers; named components (commands, phases) go through ``crc32``.

A single SM-MH chain owns two children of its seed sequence: slot 0 feeds
auxiliary variables and accept uniforms (``n + 2`` doubles per step, the
first ``n + 1`` for an initial SM-AB draw), slot 1 seeds pivot choices.
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]

AUX = 0
PIVOT = 1


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def seed_sequence(seed: SeedLike, *path) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        base, key = seed.entropy, tuple(seed.spawn_key)
    else:
        if seed is None or int(seed) < 0:
            raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
        base, key = int(seed), ()
    return np.random.SeedSequence(base, spawn_key=key + tuple(_key(p) for p in path))


def generator(seed: SeedLike, *path) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *path))


def chain_streams(seed: SeedLike) -> tuple[np.random.Generator, np.random.Generator]:
    """(auxiliary stream, pivot stream) for one chain."""
    return generator(seed, AUX), generator(seed, PIVOT)
