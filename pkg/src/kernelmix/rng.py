"""Deterministic random stream derivation.

Every randomized component in the package draws from a generator obtained
here, so a single master seed reproduces every bank, fold, trial and
training run bit-for-bit.
"""

from __future__ import annotations

import numpy as np


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for (master_seed, path).

    Uses the counter-based Philox bit generator keyed by a SeedSequence
    spawn path, so the stream for e.g. (seed, kernel_index) is the same
    no matter how many sibling streams were created or consumed before it.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))
