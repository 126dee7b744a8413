"""Derived random streams.

Every stochastic step draws from a generator keyed by the base seed plus a
tuple of stable identifiers (subject id, fold, permutation index, ...), so
results do not depend on execution order or worker count.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _as_word(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        value = int(part)
        if value >= 0:
            return value
    digest = hashlib.sha256(repr(part).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence(base_seed: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([_as_word(base_seed), *(_as_word(k) for k in keys)])


def rng_for(base_seed: int, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(base_seed, *keys)))


def derive_seed(base_seed: int, *keys) -> int:
    return int(seed_sequence(base_seed, *keys).generate_state(1, np.uint32)[0])
