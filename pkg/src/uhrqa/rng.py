"""Seeded xorshift64* generator.

Deliberately tiny and self-contained: selections made with it (random
patches, hybrid sampling) must reproduce bit-for-bit across platforms and
library versions, which rules out delegating to an external RNG.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_MULT = 2685821657736338717


class XorShift64Star:
    def __init__(self, seed: int):
        # state must be nonzero; splitmix-style scramble spreads small seeds
        s = (seed & _MASK) or 0x9E3779B97F4A7C15
        s = (s ^ (s >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
        s = (s ^ (s >> 27)) * 0x94D049BB133111EB & _MASK
        self._state = (s ^ (s >> 31)) or 1

    def next_u64(self) -> int:
        x = self._state
        x ^= (x >> 12)
        x ^= (x << 25) & _MASK
        x ^= (x >> 27)
        self._state = x
        return (x * _MULT) & _MASK

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def sample(self, population: list, k: int) -> list:
        """k items without replacement (partial Fisher-Yates, order preserved
        by draw)."""
        if k > len(population):
            raise ValueError("sample larger than population")
        pool = list(population)
        out = []
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out
