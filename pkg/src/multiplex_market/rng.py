"""Named, independent random substreams derived from one master seed.

Each consumer (topology, initial state, expectation noise, ...) gets its own
generator, so adding draws in one place never shifts the numbers another
place sees.
"""
from __future__ import annotations

import zlib

import numpy as np

STREAMS = ("topology", "init", "fundamental", "noise", "orders", "drive", "ties",
           "heterogeneity")


def substream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


def substreams(seed: int, names=STREAMS) -> dict[str, np.random.Generator]:
    return {name: substream(seed, name) for name in names}
