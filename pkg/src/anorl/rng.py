"""Labeled, reproducible random streams.

Every stochastic component (environment, exploration, parameter init,
each worker) draws from its own stream derived from the master seed and a
string label, so adding or reordering components never perturbs another
component's randomness.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(master_seed: int, label: str) -> np.random.Generator:
    """Return an independent generator for (master_seed, label)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([master_seed, key]))
