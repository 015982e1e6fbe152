"""Counter-based random numbers for reproducible, stream-parallel Monte Carlo.

Every variate is a pure function of ``(base_seed, stream_index, counter)``:

    key   = mix64(mix64(base_seed) + stream_index * STREAM_GAMMA)
    bits  = mix64(key + (counter + 1) * GAMMA)
    u     = ((bits >> 11) + 0.5) * 2**-53

``mix64`` is the SplitMix64 finalizer, so for a fixed stream the outputs are
exactly the SplitMix64 sequence started at ``key``.  Because nothing is
stateful, streams can be evaluated in any grouping or order and produce the
same numbers bit for bit.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["mix64", "stream_keys", "uniforms", "normals", "CounterRNG"]

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
STREAM_GAMMA = 0xD1B54A32D192ED03

_U64 = np.uint64


def mix64(z):
    """SplitMix64 output function on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=_U64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def stream_keys(base_seed: int, stream_index) -> np.ndarray:
    """Per-stream keys for a base seed; ``stream_index`` may be an array."""
    seed = np.array([int(base_seed) & MASK64], dtype=_U64)
    idx = np.asarray(stream_index, dtype=_U64)
    with np.errstate(over="ignore"):
        return mix64(mix64(seed)[0] + idx * _U64(STREAM_GAMMA))


def _bits(keys, counters) -> np.ndarray:
    keys = np.asarray(keys, dtype=_U64)
    counters = np.asarray(counters, dtype=_U64)
    with np.errstate(over="ignore"):
        return mix64(keys + (counters + _U64(1)) * _U64(GAMMA))


def uniforms(keys, counters) -> np.ndarray:
    """Uniforms on the open interval (0, 1); broadcasts keys against counters."""
    b = _bits(keys, counters) >> _U64(11)
    return (b.astype(np.float64) + 0.5) * 2.0**-53


def normals(keys, counters) -> np.ndarray:
    """Standard normals by inverting the normal CDF at :func:`uniforms`."""
    return ndtri(uniforms(keys, counters))


class CounterRNG:
    """Convenience view of a single stream."""

    def __init__(self, base_seed: int, stream_index: int = 0):
        self.base_seed = int(base_seed)
        self.stream_index = int(stream_index)
        self.key = stream_keys(self.base_seed, self.stream_index)

    def uniform(self, start: int, n: int) -> np.ndarray:
        return uniforms(self.key, np.arange(start, start + n, dtype=_U64))

    def normal(self, start: int, n: int) -> np.ndarray:
        return normals(self.key, np.arange(start, start + n, dtype=_U64))

    def __repr__(self):
        return f"CounterRNG(base_seed={self.base_seed}, stream_index={self.stream_index})"
