"""Per-set true-LRU recency stack: a list of way indices, MRU first."""
from __future__ import annotations


class RecencyStack:
    """
    Positions of valid blocks are a permutation of 0..len-1, position 0 = MRU.
    Invalid ways are simply absent.
    """

    __slots__ = ("order",)

    def __init__(self) -> None:
        self.order: list[int] = []

    def position(self, way: int) -> int:
        return self.order.index(way)

    def promote(self, way: int) -> None:
        """Move `way` to MRU; blocks above it shift down by one."""
        order = self.order
        order.remove(way)
        order.insert(0, way)

    def push_mru(self, way: int) -> None:
        self.order.insert(0, way)

    def push_lru(self, way: int) -> None:
        self.order.append(way)

    def remove(self, way: int) -> None:
        self.order.remove(way)

    def lru(self, skip=None) -> int:
        """Least-recently-used way, ignoring ways for which `skip(way)` is true."""
        if skip is None:
            return self.order[-1]
        for way in reversed(self.order):
            if not skip(way):
                return way
        raise LookupError("every way is excluded")

    def __len__(self) -> int:
        return len(self.order)

    def __repr__(self) -> str:
        return f"RecencyStack({self.order})"
