"""Seeded counter-based random streams; nothing touches global RNG state."""

import zlib

import numpy as np


def make_rng(seed: int, *tags) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and a tuple of stream tags.

    Distinct tags give independent streams, so consumers do not perturb each
    other's draws when the order of calls changes.
    """
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            words.append(zlib.crc32(tag.encode()))
        else:
            words.append(int(tag) & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
