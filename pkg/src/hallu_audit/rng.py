"""Deterministic randomness for seeded pipeline steps.

All seeded operations draw from SplitMix64 streams so that identical
(seed, input) pairs produce bit-identical artifacts regardless of platform
or language. Per-element streams are derived by mixing the run seed with the
zero-based element index, which keeps points independent and the whole step
parallelizable without changing its output.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """SplitMix64 finalizer: one full avalanche pass over a 64-bit value."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def hash64(text: str) -> int:
    """FNV-1a 64-bit hash of a string, for mixing text into stream seeds."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


class SplitMix64:
    """The SplitMix64 generator (Steele, Lea, Flood 2014 update rule)."""

    __slots__ = ("_state",)

    def __init__(self, state: int):
        self._state = state & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"below() needs a positive bound, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), uniform without replacement.

        Partial Fisher-Yates: deterministic, consumes exactly k draws'
        worth of rejection-sampled values.
        """
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def derive_stream(seed: int, index: int | None = None) -> SplitMix64:
    """Stream for (run seed, element index); index None is the run-level stream.

    The index is offset by one before mixing: mix64(0) is 0, so without
    the offset the stream for element 0 would equal the run-level stream.
    """
    if index is None:
        return SplitMix64(mix64(seed))
    return SplitMix64(derive_seed(seed, index))


def derive_seed(seed: int, index: int) -> int:
    """A child seed for element `index` of a run seeded with `seed`."""
    return mix64((seed ^ mix64(index + 1)) & _MASK64)
