"""Named, independent random streams derived from one replication seed.

Every consumer of randomness asks for its own stream keyed by a purpose tag
plus integer coordinates (node ids, block index, ...).  Results therefore do
not depend on the order in which streams are requested, which is what keeps
replications reproducible and lets paired runs share draws.
"""
import numpy as np

WORLD = 1
LOS = 2
ACTIVITY = 3
MOBILITY = 4
DIRECT = 5
RIS = 6
RAND_PHASE = 7
TRAFFIC = 8
EXPERIMENT = 9


def stream(seed, *key):
    """Return a generator for ``(seed, *key)``; keys must be non-negative ints."""
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))
