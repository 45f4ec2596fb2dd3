"""Counter-based random streams with integer-indexed substreams.

All stochastic code in this package draws from Philox streams derived
from a single integer seed. Substreams are obtained by advancing the
counter in disjoint 2**64 blocks, so stream ``(seed, i)`` never overlaps
stream ``(seed, j)`` for i != j and the draw sequence is independent of
how work is scheduled across threads or processes.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "spawn_generators"]

_BLOCK = 1 << 64


def substream(seed: int, index: int) -> np.random.Generator:
    """Return generator number ``index`` of the family keyed by ``seed``.

    Parameters
    ----------
    seed : int
        Non-negative master seed.
    index : int
        Substream index, >= 0. Each index owns a disjoint counter block.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if index < 0:
        raise ValueError("substream index must be non-negative")
    bitgen = np.random.Philox(key=seed)
    bitgen.advance(index * _BLOCK)
    return np.random.Generator(bitgen)


def spawn_generators(seed: int, n: int, base: int = 0) -> list[np.random.Generator]:
    """Build ``n`` independent generators ``substream(seed, base + i)``."""
    return [substream(seed, base + i) for i in range(n)]
