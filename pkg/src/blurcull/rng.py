"""Seeded random streams: PCG64 raw output plus an explicit Box-Muller transform.

numpy guarantees the raw bit stream of a given BitGenerator stays stable across
releases, so anything derived here regenerates bit-identically from its seed.
The Gaussian transform is spelled out rather than taken from
``Generator.normal`` so the stream does not depend on numpy's ziggurat tables;
corpus metadata records GENERATOR_NAME for exactly this reason.
"""

from __future__ import annotations

import hashlib

import numpy as np

GENERATOR_NAME = "pcg64:box-muller"


def derive_seed(seed: int, *parts: str) -> int:
    """Derive an independent 64-bit stream seed from a base seed and labels.

    Used to give every image (and every purpose within an image) its own
    stream, so parallel generation order can never change the output.
    """
    h = hashlib.sha256()
    h.update(str(int(seed)).encode("ascii"))
    for part in parts:
        h.update(b"\x00")
        h.update(part.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


class UniformStream:
    """Stateful stream of doubles in (0, 1] drawn from one PCG64 instance."""

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(int(seed))

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(int(n))
        # 53-bit mantissas; the +1 keeps zero out so log() below is safe
        return ((raw >> np.uint64(11)) + np.uint64(1)) * 2.0**-53

    def gaussian(self, n: int, sigma: float = 1.0) -> np.ndarray:
        n = int(n)
        if n == 0:
            return np.zeros(0)
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log(u[:pairs]))
        theta = 2.0 * np.pi * u[pairs:]
        z = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])[:n]
        return float(sigma) * z


def gaussian(seed: int, n: int, sigma: float = 1.0) -> np.ndarray:
    """n i.i.d. N(0, sigma^2) draws from the stream identified by seed."""
    return UniformStream(seed).gaussian(n, sigma)
