"""Named, counter-based random streams.

Every random draw in the generator comes from a Philox stream keyed by
(master_seed, scene_index, tag), so scenes can be produced in any order and
on any number of workers with identical results. The generator name is
recorded in manifests so a dataset is tied to the RNG that produced it.
"""
from __future__ import annotations

import zlib

import numpy as np

GENERATOR_NAME = "philox4x64-10/seedseq-v1"

# Tag for draws that belong to the whole dataset rather than one scene.
GLOBAL_STREAM = -1


def stream(master_seed: int, scene_index: int, tag: str) -> np.random.Generator:
    """Independent generator for one (seed, scene, purpose) combination."""
    if master_seed < 0:
        raise ValueError(f"master seed must be non-negative, got {master_seed}")
    key = zlib.crc32(tag.encode("ascii"))
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(scene_index & 0xFFFFFFFF, key))
    return np.random.Generator(np.random.Philox(seq))


def splitmix64(x: int) -> int:
    """Reference mixer for per-pixel sample decorrelation (64-bit avalanche).

    The render kernels carry a jit-compiled copy of this exact function;
    tests assert the two stay identical.
    """
    z = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def hash_to_unit(x: int) -> float:
    """Map a counter to a float in [0, 1) through splitmix64."""
    return (splitmix64(x) >> 11) * (1.0 / (1 << 53))
