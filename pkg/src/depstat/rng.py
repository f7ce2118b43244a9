"""Label-addressed random substreams.

Every random draw in depstat comes from a generator addressed by
``(seed, *labels)``.  Labels are stable strings or non-negative integers, so
the stream used for, say, permutation 17 of repetition 3 does not depend on
how work is scheduled across threads or processes.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _words(label) -> tuple[int, ...]:
    if isinstance(label, (bool, np.bool_)):
        raise TypeError("boolean labels are ambiguous")
    if isinstance(label, (int, np.integer)):
        value = int(label)
        if value < 0:
            raise ValueError(f"integer labels must be non-negative, got {value}")
        # length prefix keeps (1, 2) and (2**32 + 2,) apart
        words = []
        while True:
            words.append(value & _MASK32)
            value >>= 32
            if not value:
                break
        return (len(words), *words)
    if isinstance(label, (float, np.floating)):
        label = "f:" + repr(float(label))
    if not isinstance(label, str):
        raise TypeError(f"unsupported label type {type(label).__name__}")
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return (0xFFFFFFFF, int.from_bytes(digest[:4], "little"), int.from_bytes(digest[4:], "little"))


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    key: list[int] = []
    for label in labels:
        key.extend(_words(label))
    return np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(key))


def substream(seed: int, *labels) -> np.random.Generator:
    """Independent generator for the stream named by ``labels`` under ``seed``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *labels)))


def derive_seed(seed: int, *labels) -> int:
    """A 64-bit child seed, for handing a stream to code that wants an integer."""
    lo, hi = seed_sequence(seed, *labels).generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
