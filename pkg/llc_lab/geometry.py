"""CacheGeometry: set-associative cache shape and address slicing."""
from __future__ import annotations

import re

from ._errors import InvalidSpecError


def _is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


def parse_size(s: "str | int") -> int:
    """Parse a byte count: 4096, "256K", "16M", "0x1000"."""
    if isinstance(s, int):
        return s
    m = re.fullmatch(r"\s*(0x[0-9a-fA-F]+|\d+)\s*([kKmMgG]?)[bB]?\s*", s)
    if not m:
        raise InvalidSpecError(f"Cannot parse {s!r} as a size")
    value = int(m.group(1), 0)
    scale = {"": 1, "k": 1 << 10, "m": 1 << 20, "g": 1 << 30}[m.group(2).lower()]
    return value * scale


class CacheGeometry:
    """
    num_sets x ways blocks of block_bytes each.

    set index = (address // block_bytes) mod num_sets
    tag       = (address // block_bytes) // num_sets
    """

    __slots__ = ("_num_sets", "_ways", "_block_bytes", "_offset_bits", "_set_bits")

    def __init__(self, num_sets: int, ways: int, block_bytes: int = 64) -> None:
        if not _is_pow2(num_sets):
            raise InvalidSpecError(f"num_sets must be a power of two, got {num_sets}")
        if ways < 1:
            raise InvalidSpecError(f"ways must be >= 1, got {ways}")
        if not _is_pow2(block_bytes) or block_bytes < 8:
            raise InvalidSpecError(f"block_bytes must be a power of two >= 8, got {block_bytes}")
        self._num_sets = num_sets
        self._ways = ways
        self._block_bytes = block_bytes
        self._offset_bits = block_bytes.bit_length() - 1
        self._set_bits = num_sets.bit_length() - 1

    @classmethod
    def from_capacity(cls, capacity: "int | str", ways: int, block_bytes: int = 64) -> CacheGeometry:
        """Build from total capacity in bytes (e.g. "256K" with 16 ways)."""
        capacity = parse_size(capacity)
        if ways < 1 or capacity % (ways * block_bytes):
            raise InvalidSpecError(
                f"Capacity {capacity} is not a multiple of {ways} ways x {block_bytes}-byte blocks"
            )
        return cls(capacity // (ways * block_bytes), ways, block_bytes)

    # ------------------------------------------------------------------
    # Properties
    # ------------------------------------------------------------------

    @property
    def num_sets(self) -> int:
        return self._num_sets

    @property
    def ways(self) -> int:
        return self._ways

    @property
    def block_bytes(self) -> int:
        return self._block_bytes

    @property
    def capacity(self) -> int:
        return self._num_sets * self._ways * self._block_bytes

    @property
    def offset_bits(self) -> int:
        return self._offset_bits

    @property
    def set_bits(self) -> int:
        return self._set_bits

    # ------------------------------------------------------------------
    # Address slicing
    # ------------------------------------------------------------------

    def block_of(self, address: int) -> int:
        return address >> self._offset_bits

    def set_index(self, address: int) -> int:
        return (address >> self._offset_bits) & (self._num_sets - 1)

    def tag(self, address: int) -> int:
        return address >> (self._offset_bits + self._set_bits)

    # ------------------------------------------------------------------
    # Dunder methods
    # ------------------------------------------------------------------

    def __repr__(self) -> str:
        return f"CacheGeometry({self._num_sets}, {self._ways}, {self._block_bytes})"

    def __str__(self) -> str:
        return f"{self._num_sets}x{self._ways}x{self._block_bytes}B"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, CacheGeometry):
            return (self._num_sets, self._ways, self._block_bytes) == (
                other._num_sets, other._ways, other._block_bytes)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._num_sets, self._ways, self._block_bytes))
