"""Counter-based random streams.

Every stream is addressed by ``(base_seed, index)``. Its key is

    key = mix64(mix64(base_seed) + GAMMA * (index + 1))     (mod 2**64)

and its ``j``-th draw (``j = 0, 1, ...``) is the SplitMix64 output

    bits_j = mix64(key + GAMMA * (j + 1))                    (mod 2**64)
    u_j    = (bits_j >> 11) * 2**-53                         in [0, 1)

with ``mix64`` the SplitMix64 finalizer (constants below). Because draws are
a pure function of ``(base_seed, index, j)``, trials can be evaluated in any
order, in any batch size, and on any number of threads with bit-identical
results. :func:`uniforms` is the vectorized form used by the batched engines;
:class:`RngStream` is the sequential form used by the scalar reference code.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TO_UNIT = 2.0**-53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(base_seed: int, index: int) -> int:
    return mix64(mix64(base_seed) + GAMMA * (index + 1))


class RngStream:
    """Sequential view of one ``(base_seed, index)`` stream."""

    def __init__(self, base_seed: int, index: int = 0):
        if base_seed < 0 or index < 0:
            raise ValueError("seed and stream index must be non-negative")
        self.base_seed = base_seed & MASK64
        self.index = index
        self.key = stream_key(self.base_seed, index)
        self.counter = 0

    def uniform(self) -> float:
        self.counter += 1
        bits = mix64(self.key + GAMMA * self.counter)
        return (bits >> 11) * _TO_UNIT

    def __repr__(self) -> str:
        return f"RngStream(base_seed={self.base_seed}, index={self.index}, counter={self.counter})"


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic in numpy wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_keys(base_seed: int, indices) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.uint64)
    seed_mix = np.uint64(mix64(base_seed & MASK64))
    with np.errstate(over="ignore"):
        return _mix64_array(seed_mix + np.uint64(GAMMA) * (idx + np.uint64(1)))


def uniforms(keys: np.ndarray, draw: int) -> np.ndarray:
    """Draw number ``draw`` (0-based) of every stream in ``keys``."""
    offset = np.uint64((GAMMA * (draw + 1)) & MASK64)
    with np.errstate(over="ignore"):
        bits = _mix64_array(keys + offset)
    return (bits >> np.uint64(11)).astype(np.float64) * _TO_UNIT
