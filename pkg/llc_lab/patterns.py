"""PatternSpec: the canonical LLC access patterns (recency-friendly, streaming, thrashing)."""
from __future__ import annotations

import enum
import re

import numpy as np

from ._data import PC_MASK
from ._errors import InvalidSpecError
from .trace import Trace


class PatternKind(enum.Enum):
    RECENCY_FRIENDLY = "recency"
    STREAMING = "stream"
    THRASHING = "thrash"


class PatternSpec:
    """
    Parameters of one canonical pattern over blocks a1..ak, ai = base + (i-1)*stride.

      RECENCY_FRIENDLY  (a1..ak, ak..a1)^n
      STREAMING         (a1..ak), n recorded as 1
      THRASHING         (a1..ak)^n
    """

    __slots__ = ("_kind", "_k", "_n", "_base", "_stride")

    def __init__(self, kind: PatternKind, k: int, n: int = 1, base_address: int = 0, stride: int = 64) -> None:
        if k < 1:
            raise InvalidSpecError(f"Working-set size k must be >= 1, got {k}")
        if n < 1:
            raise InvalidSpecError(f"Repetition count n must be >= 1, got {n}")
        if base_address < 0:
            raise InvalidSpecError(f"Base address must be non-negative, got {base_address}")
        if stride < 1:
            raise InvalidSpecError(f"Stride must be positive, got {stride}")
        self._kind = PatternKind(kind)
        self._k = k
        self._n = 1 if self._kind is PatternKind.STREAMING else n
        self._base = base_address
        self._stride = stride

    # ------------------------------------------------------------------
    # Alternate constructors
    # ------------------------------------------------------------------

    @classmethod
    def parse(cls, s: str) -> PatternSpec:
        """
        Parse a generator string such as:
          - "thrash:k=32,n=64"
          - "recency:k=8,n=4,base=0x1000,stride=128"
          - "stream:k=1000"
        """
        m = re.fullmatch(r"\s*(recency|stream|thrash)\s*(?::(.*))?", s)
        if not m:
            raise InvalidSpecError(f"Cannot parse {s!r} as a pattern spec")
        fields = {"k": None, "n": "1", "base": "0", "stride": "64"}
        for item in filter(None, (m.group(2) or "").split(",")):
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep or key not in fields:
                raise InvalidSpecError(f"Unknown pattern field {item!r} in {s!r}")
            fields[key] = value.strip()
        if fields["k"] is None:
            raise InvalidSpecError(f"Pattern {s!r} is missing k=")
        try:
            return cls(
                PatternKind(m.group(1)),
                int(fields["k"], 0),
                int(fields["n"], 0),
                int(fields["base"], 0),
                int(fields["stride"], 0),
            )
        except ValueError as exc:
            if isinstance(exc, InvalidSpecError):
                raise
            raise InvalidSpecError(f"Non-integer field in pattern {s!r}") from exc

    # ------------------------------------------------------------------
    # Properties
    # ------------------------------------------------------------------

    @property
    def kind(self) -> PatternKind:
        return self._kind

    @property
    def k(self) -> int:
        return self._k

    @property
    def n(self) -> int:
        return self._n

    @property
    def base_address(self) -> int:
        return self._base

    @property
    def stride(self) -> int:
        return self._stride

    @property
    def length(self) -> int:
        """Number of records the pattern emits."""
        if self._kind is PatternKind.RECENCY_FRIENDLY:
            return 2 * self._k * self._n
        return self._k * self._n

    def __repr__(self) -> str:
        return (
            f"PatternSpec({self._kind.value}, k={self._k}, n={self._n}, "
            f"base={self._base:#x}, stride={self._stride})"
        )

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PatternSpec):
            return (self._kind, self._k, self._n, self._base, self._stride) == (
                other._kind, other._k, other._n, other._base, other._stride)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._kind, self._k, self._n, self._base, self._stride))


def generate_pattern(spec: PatternSpec, pc: int = 0, block_bytes: int = 64) -> Trace:
    """Emit the pattern as a Trace; every record carries `pc` and inst_delta 1."""
    if not 0 <= pc <= PC_MASK:
        raise InvalidSpecError(f"pc signature {pc} does not fit in 14 bits")
    if spec.stride < block_bytes:
        raise InvalidSpecError(
            f"Stride {spec.stride} is smaller than the {block_bytes}-byte block; blocks would alias"
        )
    order = np.arange(spec.k, dtype=np.uint64)
    if spec.kind is PatternKind.RECENCY_FRIENDLY:
        order = np.tile(np.concatenate([order, order[::-1]]), spec.n)
    elif spec.kind is PatternKind.THRASHING:
        order = np.tile(order, spec.n)
    addresses = np.uint64(spec.base_address) + order * np.uint64(spec.stride)
    return Trace.from_arrays(addresses, pc=pc)
