"""Deterministic random streams.

Every stochastic routine in the package takes an explicit :class:`RngStream`.
A stream is single-owner: it is never shared between tasks, only split by
deriving child seeds, which keeps ensemble runs reproducible independent of
thread count.
"""
from __future__ import annotations

import numpy as np

_M64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 mixer (stable across platforms)."""
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit hash of (master seed, task index)."""
    return splitmix64(splitmix64(master_seed & _M64) ^ splitmix64((index + 1) & _M64))


class RngStream:
    """A seeded PCG64 generator with deterministic child derivation."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _M64
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def child(self, index: int) -> "RngStream":
        """Derive an independent stream; same (seed, index) gives the same stream."""
        return RngStream(derive_seed(self.seed, index))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"
