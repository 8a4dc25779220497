"""Seed derivation and random-generator construction.

A single 64-bit master seed drives every experiment.  Replicate and
sub-stream seeds are derived with the SplitMix64 mixer, so streams are
independent and reproducible without any shared state: stream ``j`` of a
master seed is the ``j``-th output of the SplitMix64 sequence started at
that seed.  Uniform and Poisson variates come from numpy's PCG64
generator seeded with the derived value.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit integer."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of sub-stream ``index`` under ``master_seed``.

    Equals the ``index``-th output of the SplitMix64 generator whose
    state starts at ``master_seed``.
    """
    if index < 0:
        raise ValueError(f"stream index must be non-negative, got {index}")
    return mix64((master_seed + (index + 1) * _GAMMA) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed (masked to 64 bits)."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
