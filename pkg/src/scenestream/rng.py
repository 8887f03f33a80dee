"""Deterministic 64-bit PRNG used for every pseudo-random decision.

The generator is xoshiro256** with splitmix64 state expansion. Both are
implemented from their published update equations rather than through
``random``/``numpy.random`` so that streams are reproducible bit-for-bit
from a written-down algorithm, independent of library versions:

    splitmix64:  z = (x += 0x9E3779B97F4A7C15)
                 z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
                 z = (z ^ (z >> 27)) * 0x94D049BB133111EB
                 return z ^ (z >> 31)

    xoshiro256**: result = rotl(s1 * 5, 7) * 9
                  t = s1 << 17
                  s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t
                  s3 = rotl(s3, 45)

Per-object streams are derived as ``master_seed XOR fnv1a64(object_id)``,
so adding or removing one object never perturbs another object's stream.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64_next(x: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; stable across runs and platforms."""
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def derive_stream_seed(master_seed: int, object_id: str) -> int:
    return (master_seed & MASK64) ^ fnv1a64(object_id.encode("utf-8"))


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** stream. State is four 64-bit words, explicitly exposed
    so simulation state can be snapshotted and replayed byte-exactly."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        x = seed & MASK64
        x, self.s0 = splitmix64_next(x)
        x, self.s1 = splitmix64_next(x)
        x, self.s2 = splitmix64_next(x)
        x, self.s3 = splitmix64_next(x)

    @classmethod
    def from_state(cls, state: tuple[int, int, int, int]) -> "Xoshiro256":
        rng = cls.__new__(cls)
        rng.s0, rng.s1, rng.s2, rng.s3 = (w & MASK64 for w in state)
        return rng

    @property
    def state(self) -> tuple[int, int, int, int]:
        return (self.s0, self.s1, self.s2, self.s3)

    def next_u64(self) -> int:
        result = (_rotl((self.s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (self.s1 << 17) & MASK64
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def unit_vector(self) -> tuple[float, float, float]:
        """Uniform direction on the unit sphere (two draws: z then phi)."""
        import math

        z = 2.0 * self.uniform() - 1.0
        phi = 2.0 * math.pi * self.uniform()
        r = math.sqrt(max(0.0, 1.0 - z * z))
        return (r * math.cos(phi), r * math.sin(phi), z)
