"""
Deterministic seed splitting.

Every random stream is derived from one root seed plus a path of labels:

    SeedSequence(entropy=root, spawn_key=(stable_key(label_1), stable_key(label_2), ...))

Integer labels are used as-is, string labels are mapped through the first
8 hex digits of their md5 digest. The same (root, labels) pair always yields
the same stream, independent of the order in which streams are requested.
"""

import hashlib
from typing import Union

import numpy as np

Label = Union[int, str]


def stable_key(label: Label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"Seed labels must be non-negative, got {label}")
        return int(label)
    return int(hashlib.md5(str(label).encode()).hexdigest()[:8], 16)


def seed_sequence(root: int, *labels: Label) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(root), spawn_key=tuple(stable_key(l) for l in labels))


def derive_rng(root: int, *labels: Label) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(root, *labels))


def derive_seed(root: int, *labels: Label) -> int:
    """A 63-bit integer seed for APIs that take plain ints (e.g. nested configs)."""
    return int(seed_sequence(root, *labels).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stable_hash(payload: str) -> str:
    return hashlib.md5(payload.encode()).hexdigest()
