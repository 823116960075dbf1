"""Deterministic random substreams.

Every randomized work item draws from its own generator::

    Generator(PCG64(SeedSequence(entropy=master_seed, spawn_key=key)))

where ``key`` is a tuple of non-negative integers naming the item, e.g.
``(STREAM_SAMPLE, n, replication)``.  Results therefore do not depend on
the order in which items run or on how many workers run them.  Changing
this derivation invalidates stored outputs, so it carries a version.
"""

from __future__ import annotations

import numpy as np

SEED_SCHEME_VERSION = 1

STREAM_SAMPLE = 1
STREAM_BOOTSTRAP = 2
STREAM_FIT = 3


def substream(master_seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
