"""Expected-linear-time selection of the kth smallest value."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K


@dataclass(frozen=True)
class SelectionResult:
    value: float
    index: int
    comparisons: int = 0
    depth: int = 0


def pivot_seed(rng: np.random.Generator | None) -> np.uint64:
    """A 64-bit pivot-stream seed taken from ``rng`` (fixed if ``rng`` is None)."""
    if rng is None:
        return np.uint64(0x5EED)
    return np.uint64(rng.integers(0, 2**63))


def quickselect(values, k: int, rng: np.random.Generator | None = None) -> SelectionResult:
    """Return the ``k``th smallest (1-based) of ``values`` and its position.

    Pivots are drawn at random, seeded from ``rng``. The caller's array is
    never reordered; the partitioning runs on an index permutation. With
    ties, any position holding the kth smallest value may be returned.

    >>> quickselect([5.0, 1.0, 4.0, 2.0], 3).index
    2
    """
    v = np.ascontiguousarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("quickselect expects a 1-d vector")
    if v.size == 0:
        raise ValueError("cannot select from an empty vector")
    if not 1 <= k <= v.size:
        raise ValueError(f"k={k} out of range 1..{v.size}")
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")
    index, comparisons, depth, _ = K.select_kth(v, k - 1, pivot_seed(rng))
    return SelectionResult(float(v[index]), int(index), int(comparisons), int(depth))
