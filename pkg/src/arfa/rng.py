"""Seeded, splittable random number streams.

All randomness in arfa flows through numpy ``Generator`` objects backed by
PCG64. A stream is addressed by ``(seed, *key)`` and constructed as
``Generator(PCG64(SeedSequence(seed, spawn_key=key)))``, so distinct keys
yield statistically independent streams and the same ``(seed, key)`` pair
reproduces the same draws bit-for-bit on any machine.

Key conventions used by the package (callers may pick their own):

* ``(0,)``   -- KL threshold calibration,
* ``(1, i)`` -- Monte Carlo trial ``i`` of a study.
"""

from __future__ import annotations

import numpy as np

# Stream-key namespaces used by pipeline/bench.
CALIBRATION_KEY = (0,)
TRIAL_KEY = 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the PCG64 generator for stream ``key`` of ``seed``."""
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
