"""Counter-based random streams for reproducible, order-independent sampling.

Every variate consumed by the Monte Carlo engine is a pure function of
(master seed, shot index, slot index), so a batch can be evaluated in any
chunking, any order, or on any number of workers and produce bit-identical
statistics. The generator is a SplitMix64 stream keyed per (seed, slot):
the slot picks a stream, the shot index walks it. SplitMix64's finalizer
gives full 64-bit avalanche, which is ample for Monte Carlo sampling (this
is not a cryptographic generator).
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def _stream_key(seed: int, slot: int) -> np.uint64:
    s = _U64(seed & 0xFFFFFFFFFFFFFFFF)
    return _mix(s ^ _mix(_U64((slot + 1) & 0xFFFFFFFFFFFFFFFF) * _GOLDEN))


def counter_uniforms(seed: int, shot_indices: np.ndarray, slot: int) -> np.ndarray:
    """Uniforms in [0, 1), one per shot index, for the given slot."""
    idx = np.asarray(shot_indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = _mix(_stream_key(seed, slot) + (idx + _U64(1)) * _GOLDEN)
    return (bits >> _U64(11)) * (2.0**-53)


def counter_normals(seed: int, shot_indices: np.ndarray, slot: int) -> np.ndarray:
    """Standard normals, one per shot index, via Box-Muller on two slots."""
    u1 = counter_uniforms(seed, shot_indices, slot)
    u2 = counter_uniforms(seed, shot_indices, slot + 1)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    return r * np.cos(2.0 * np.pi * u2)


def derive_seed(master: int, *indices: int) -> int:
    """Deterministic sub-seed for a labelled task (sweep cell, axis, ...)."""
    z = _U64(master & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for ix in indices:
            z = _mix(z ^ (_U64(ix & 0xFFFFFFFFFFFFFFFF) + _GOLDEN))
    return int(z)
