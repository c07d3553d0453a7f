"""Counter-based random streams.

Streams are derived from a master seed plus a path of indices placed in
the high words of a Philox counter, so any replicate's stream can be
constructed directly: serial and parallel execution consume identical
randomness, and outputs are bit-reproducible for a fixed master seed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream"]

_MASK64 = (1 << 64) - 1


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent Generator for the given (master_seed, *path) address."""
    if len(path) > 3:
        raise ValueError("stream path supports at most 3 indices")
    counter = [0, 0, 0, 0]
    for i, part in enumerate(path):
        part = int(part)
        if part < 0 or part > _MASK64:
            raise ValueError("path indices must fit in uint64")
        counter[i + 1] = part
    key = int(master_seed) & ((1 << 128) - 1)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
