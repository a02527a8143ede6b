"""Deterministic random-stream derivation.

Every stochastic operation draws from a generator keyed by a root seed plus
a structural key (family label, coder id, event id, ...), so results do not
depend on scheduling or thread count.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *key: object) -> np.random.Generator:
    """Return a generator for (seed, key); identical keys give identical streams."""
    token = "\x1f".join([str(int(seed)), *(str(part) for part in key)])
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    entropy = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]
    return np.random.default_rng(np.random.SeedSequence(entropy))
