"""Deterministic derivation of independent random sub-streams.

Replicated simulations and sampled paths each get their own generator seeded
from (master seed, index), so results are bit-reproducible and independent of
how the work is split across workers.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def substream_seed(seed: int, index: int) -> int:
    """Mix (seed, index) into a 64-bit sub-stream seed.

    The master seed is advanced ``index + 1`` golden-ratio steps and pushed
    through the splitmix64 finalizer.  The mixing is part of the public
    contract: sub-stream ``index`` yields the same seed no matter how many
    other sub-streams are drawn.
    """
    if index < 0:
        raise ValueError("sub-stream index must be non-negative")
    z = (int(seed) + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
