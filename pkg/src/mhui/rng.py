"""Deterministic random number generation.

Every stochastic step in the package (data synthesis, weight init, batch
shuffling) draws from this generator so results are reproducible from a
single integer seed and do not depend on any library's RNG internals.

Algorithm: xorshift64* with the conventional constants

    state ^= state >> 12
    state ^= state << 25
    state ^= state >> 27
    output = state * 0x2545F4914F6CDD1D    (all mod 2**64)

States are initialized by passing the seed through one round of
splitmix64, which also guards against the forbidden all-zero state.
Derived streams (per subsystem, per head, ...) hash their labels with
64-bit FNV-1a and fold the result into the parent seed via splitmix64,
so stream separation never relies on Python's salted hash().
"""

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_XORSHIFT_MULT = 0x2545F4914F6CDD1D
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """One splitmix64 scrambling round (finalizer included)."""
    z = (x + _SPLITMIX_GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def derive_seed(seed: int, *labels: int | str) -> int:
    """Derive an independent stream seed from a parent seed and labels.

    Labels may be ints or strings; the derivation is stable across runs
    and platforms.
    """
    mixed = splitmix64(seed & _MASK)
    for label in labels:
        data = label.encode("utf-8") if isinstance(label, str) else str(label).encode("ascii")
        mixed = splitmix64(mixed ^ _fnv1a(data))
    return mixed


class Xorshift64Star:
    """64-bit xorshift* generator with documented constants (see module doc)."""

    def __init__(self, seed: int):
        state = splitmix64(seed & _MASK)
        self._state = state if state != 0 else _SPLITMIX_GAMMA

    def next_u64(self) -> int:
        s = self._state
        s ^= (s >> 12)
        s ^= (s << 25) & _MASK
        s ^= (s >> 27)
        self._state = s
        return (s * _XORSHIFT_MULT) & _MASK

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def normal(self) -> float:
        """Standard normal via Box-Muller (cosine branch, no caching)."""
        u1 = 1.0 - self.uniform()  # (0, 1], keeps the log finite
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> list[float]:
        return [self.normal() for _ in range(n)]

    def uniforms(self, n: int) -> list[float]:
        return [self.uniform() for _ in range(n)]

    def randbelow(self, n: int) -> int:
        """Integer in [0, n). Bias from the float path is O(n / 2**53)."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        return int(self.uniform() * n)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def shuffled_indices(self, n: int) -> list[int]:
        idx = list(range(n))
        self.shuffle(idx)
        return idx
