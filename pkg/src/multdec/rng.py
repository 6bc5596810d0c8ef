"""Seedable, cross-platform deterministic randomness.

Two widely documented 64-bit generators, implemented with plain integer
arithmetic so streams are reproducible across implementations:

* ``splitmix64`` (Steele, Lea & Flood's SplitMix) -- used to derive
  per-trial sub-seeds from a master seed and to seed the stream generator.
  State update: ``state += 0x9E3779B97F4A7C15``; output mixes the state
  with the 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB multipliers.
* ``xorshift64*`` (Vigna) -- the draw stream.  Update ``x ^= x >> 12``,
  ``x ^= x << 25``, ``x ^= x >> 27``; output ``x * 0x2545F4914F6CDD1D``.

Bounded draws use ``next() % n``; with n below a few thousand the modulo
bias is under 2**-50 and irrelevant at the tested sample sizes.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MIX1 = 0xBF58476D1CE4E5B9
_SM_MIX2 = 0x94D049BB133111EB
_XS_MULT = 0x2545F4914F6CDD1D


def splitmix64_next(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (new_state, output)."""
    state = (state + _SM_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _SM_MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _SM_MIX2) & MASK64
    z ^= z >> 31
    return state, z


def subseed(master: int, index: int) -> int:
    """The index-th sub-seed of the SplitMix64 sequence started at master."""
    if index < 0:
        raise ValueError("sub-seed index must be nonnegative")
    state = master & MASK64
    out = 0
    for _ in range(index + 1):
        state, out = splitmix64_next(state)
    return out


class XorShift64Star:
    """Vigna's xorshift64* stream, seeded through one SplitMix64 step."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        _, mixed = splitmix64_next(seed & MASK64)
        self.state = mixed or _SM_GAMMA  # the all-zero state is absorbing

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _XS_MULT) & MASK64

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs a positive bound")
        return self.next_u64() % n

    def sample_without_replacement(self, n: int, count: int) -> list[int]:
        """First ``count`` entries of a partial Fisher-Yates shuffle of range(n)."""
        if not 0 <= count <= n:
            raise ValueError("sample size out of range")
        idx = list(range(n))
        for i in range(count):
            j = i + self.randbelow(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:count]
