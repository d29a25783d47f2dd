"""
The run-owned PRNG. PCG64 via numpy, drawn in blocks so the per-access cost of
a coin flip stays small.
"""
from __future__ import annotations

import numpy as np

_BLOCK = 4096


class RunRandom:
    """Seeded PCG64 stream shared by every random decision of one simulation run."""

    __slots__ = ("_gen", "_uniform", "_pos")

    def __init__(self, seed: int) -> None:
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._uniform: list[float] = []
        self._pos = 0

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        if self._pos == len(self._uniform):
            self._uniform = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        x = self._uniform[self._pos]
        self._pos += 1
        return x

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return min(int(self.random() * n), n - 1)

    def choice(self, items: list):
        return items[self.below(len(items))]

    def fork(self) -> RunRandom:
        """Independent child stream, deterministic given this stream's state."""
        return RunRandom(int(self._gen.integers(0, 2**63 - 1)))
