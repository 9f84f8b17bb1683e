"""Seeded random streams.

All sampling uses numpy's Philox4x64 counter-based generator keyed by the
run seed.  Substream ``i`` is the base stream jumped ahead by ``i * 2**128``
draws, so batch ``i`` sees the same numbers regardless of how batches are
scheduled across workers.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "substreams"]


def _base(seed: int) -> np.random.Philox:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.Philox(key=int(seed) % (1 << 64))


def substream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(_base(seed).jumped(int(index)))


def substreams(seed: int, count: int, offset: int = 0) -> list[np.random.Generator]:
    base = _base(seed)
    return [np.random.Generator(base.jumped(offset + i)) for i in range(count)]
