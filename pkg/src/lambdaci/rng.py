"""Seeded random substreams.

Every Monte Carlo draw in the package comes from a generator keyed by
``(seed, *key)``.  The key is mixed into the seed with numpy's
``SeedSequence`` hash, so a replicate's stream depends only on its key and
never on the order in which replicates are evaluated.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 generator for the substream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(
        entropy=int(seed) & MASK64, spawn_key=tuple(int(k) for k in key)
    )
    return np.random.Generator(np.random.PCG64(ss))


def substream_uniforms(seed: int, n: int, *key: int) -> np.ndarray:
    """``n`` standard uniforms from substream ``key``, strictly inside (0, 1)."""
    u = substream(seed, *key).random(n)
    # Generator.random draws from [0, 1); 0 maps to an infinite quantile.
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
