"""Deterministic random-stream derivation.

Every stochastic routine takes an explicit generator; streams are derived
from a root seed plus an integer key path, so per-case work is independent
of execution order and reproducible across runs.
"""

import numpy as np


def stream(seed, *key):
    """Generator for the stream identified by (seed, key...).

    Uses a counter-based bit generator keyed by a spawn path, so distinct
    key tuples give statistically independent streams and the mapping is
    stable across platforms.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
