"""Deterministic fan-out of one master seed into named child streams.

Every source of randomness in a run draws from its own numpy Generator,
derived from the master seed and a stream name plus optional integer indices
(iteration number, path position, replication id, ...).  The splitting rule is
``SeedSequence(master_seed, spawn_key=(STREAM_IDS[name], *indices))``, so any
stream can be reproduced in isolation and swapping the consumption pattern of
one stream (e.g. the delay uniforms) leaves every other stream untouched.
"""

from __future__ import annotations

import numpy as np

# Fixed name -> id table; changing it changes every derived stream.
STREAM_IDS = {
    "sbm": 0,
    "path": 1,
    "delays": 2,
    "labels": 3,
    "perturbation": 4,
    "oracle": 5,
    "seed-draw": 6,
}


def stream(master_seed: int, name: str, *indices: int) -> np.random.Generator:
    """Return the named child Generator for this master seed.

    Args:
        master_seed: non-negative master seed of the run.
        name: one of the keys in STREAM_IDS.
        indices: optional integer sub-indices (iteration, position, ...).
    """
    if name not in STREAM_IDS:
        raise ValueError(f"unknown stream name {name!r}; known: {sorted(STREAM_IDS)}")
    key = (STREAM_IDS[name],) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))
