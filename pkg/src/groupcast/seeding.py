"""Deterministic random-stream derivation.

One experiment owns a single integer seed.  Every consumer (a simulation
chunk, a scheduler run, a sweep point) derives its own independent
substream from (seed, key...), so results do not depend on execution
order and chunks can run in parallel.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for substream `key` of the experiment `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
