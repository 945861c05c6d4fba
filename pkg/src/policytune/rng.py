"""Deterministic, portable random number generation.

Everything stochastic in this package (environment initial conditions,
perturbation sampling, weight init, random-action rollouts) draws from the
counter-based SplitMix64 stream implemented here, so runs are reproducible
bit for bit across processes and worker counts. numpy's own Generator is
deliberately not used: its streams are not guaranteed stable across numpy
versions, and these ones are pinned by golden-value tests.

Stream definition (Vigna's SplitMix64 with the standard constants):

    output[i] = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)   (mod 2^64)

where mix64 is the xor-shift/multiply finalizer below. Because the state is
a pure function of (seed, i), blocks of outputs vectorize cleanly.

Uniform doubles take the top 53 bits of an output, giving values in [0, 1).
Gaussians use Box-Muller on consecutive uniform pairs (u1, u2):

    r = sqrt(-2 ln(1 - u1)),  z0 = r cos(2 pi u2),  z1 = r sin(2 pi u2)

consumed in a fixed interleaved pattern (z0, z1, z0, z1, ...); a request for
k gaussians always advances the stream by 2*ceil(k/2) uniforms.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Reserved "pair" values for derive_seed, so auxiliary streams can never
# collide with per-pair episode seeds (pair indices are small integers) or
# with each other. Evaluation uses a reserved "update" value instead, keeping
# its whole seed namespace disjoint from training.
STREAM_DELTAS = 1 << 62
STREAM_INIT = (1 << 62) + 1
STREAM_NORM_ENV = (1 << 62) + 2
STREAM_NORM_ACT = (1 << 62) + 3
EVAL_UPDATE_OFFSET = 1 << 63


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer (pure Python, exact)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master: int, update: int, pair: int) -> int:
    """Mix (master seed, update index, pair index) into one 64-bit episode seed.

    Pure function: mix64(master XOR update*0x9E3779B97F4A7C15
    XOR pair*0xBF58476D1CE4E5B9), all arithmetic mod 2^64.
    """
    z = (master & _MASK64) ^ ((update * _GAMMA) & _MASK64) ^ ((pair * _MIX1) & _MASK64)
    return mix64(z)


class Prng:
    """Counter-based SplitMix64 stream with vectorized block output."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.counter = 0  # outputs consumed so far

    def next_uint64(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit outputs as a uint64 array."""
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        z = np.uint64(self.seed) + idx * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniform(self, count: int) -> np.ndarray:
        """`count` doubles uniform on [0, 1)."""
        return (self.next_uint64(count) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)

    def uniform_range(self, low: float, high: float, count: int) -> np.ndarray:
        """`count` doubles uniform on [low, high) by scale-and-shift."""
        return low + (high - low) * self.uniform(count)

    def gaussian(self, count: int) -> np.ndarray:
        """`count` standard normal doubles via Box-Muller (fixed consumption)."""
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        # log1p(-u1) = ln(1 - u1); u1 in [0,1) keeps the argument in (0, 1].
        r = np.sqrt(-2.0 * np.log1p(-u1))
        angle = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(angle)
        out[1::2] = r * np.sin(angle)
        return out[:count]
