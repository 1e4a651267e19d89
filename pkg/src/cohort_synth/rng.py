"""Deterministic RNG substreams derived from a single base seed.

Every stochastic unit of work (a tree index, a sequence index, a fit for one
activity code) draws from its own generator, derived from (base seed, path).
Parallel and serial execution therefore consume identical streams.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(base_seed: int, *path: int | str) -> int:
    """Map (base_seed, path parts) to a stable 64-bit child seed."""
    text = ":".join([str(int(base_seed)), *[str(p) for p in path]])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(base_seed: int, *path: int | str) -> np.random.Generator:
    """Independent generator for one named unit of work."""
    return np.random.default_rng(derive_seed(base_seed, *path))
