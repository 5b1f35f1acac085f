"""Seed bookkeeping.

Every random quantity is drawn from ``SeedSequence(seed, spawn_key=key)``
where ``key`` is a tuple of stage tags and indices, so streams belonging
to different stages or replicates never overlap.
"""

import numpy as np

# stage tags
DATA = 0
RATE_ESTIMATION = 1
CONFIDENCE_INTERVAL = 2
CHERNOFF = 10
COMPOUND = 11
LEVELS = 12
DRIFT_CHECK = 13
ORACLE = 14
HARNESS = 20


def seed_sequence(seed, *key):
    """Return the seed sequence for ``seed`` under the spawn key ``key``.

    ``seed`` may itself be a ``SeedSequence``; its spawn key is extended.
    """
    key = tuple(int(k) for k in key)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def generator(seed, *key):
    return np.random.default_rng(seed_sequence(seed, *key))


def describe(seq):
    """JSON-friendly description of a seed sequence."""
    return {"entropy": int(seq.entropy), "spawn_key": [int(k) for k in seq.spawn_key]}
