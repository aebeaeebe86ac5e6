"""Portable seeded randomness.

All stochastic decisions in the engine draw from SplitMix64 streams so that
seeded runs are bit-reproducible across platforms and easy to re-implement
in other languages. Streams are derived, never shared:

    room master seed --derive("agent:<id>")--> per-agent stream
    room master seed --derive("room")-------> room-level stream
    batch master seed --derive("trial:<n>")--> per-trial room seed

Derivation is `splitmix(master XOR fnv1a64(label))`, one step.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of a UTF-8 string."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def _splitmix_step(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return state, z


class SplitMix64:
    """SplitMix64 generator with labelled stream derivation."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state, out = _splitmix_step(self._state)
        return out

    def random(self) -> float:
        """Uniform float in [0, 1) using the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). One draw consumed."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return int(self.random() * n)

    def bernoulli(self, p: float) -> bool:
        """True with probability p. Always consumes exactly one draw."""
        return self.random() < p


def derive_seed(master_seed: int, label: str) -> int:
    """Derive a child seed from a master seed and a stream label."""
    _, out = _splitmix_step((master_seed ^ fnv1a64(label)) & MASK64)
    return out


def derive_stream(master_seed: int, label: str) -> SplitMix64:
    return SplitMix64(derive_seed(master_seed, label))
