"""Memory access records, the packed Trace container and its on-disk format."""
from __future__ import annotations

import enum
import hashlib
import logging
import struct
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Union

import numpy as np

from ._data import (
    FLAG_HINT_VALID,
    FLAG_WRITE,
    HINT_MASK,
    HINT_SHIFT,
    PC_BITS,
    PC_MASK,
    TRACE_HEADER_BYTES,
    TRACE_MAGIC,
    TRACE_RECORD_BYTES,
    TRACE_VERSION,
)
from ._errors import BadMagicError, FormatError, InvalidSpecError, TruncatedDataError, VersionMismatchError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# One record on disk. Field order and widths are the file format.
RECORD_DTYPE = np.dtype([
    ("address", "<u8"),
    ("pc", "<u2"),
    ("flags", "u1"),
    ("reserved", "u1"),
    ("inst_delta", "<u4"),
])
assert RECORD_DTYPE.itemsize == TRACE_RECORD_BYTES

_HEADER = struct.Struct("<4sB3sQ")
_RESERVED = bytes(3)


class ReuseHint(enum.IntEnum):
    """2-bit software reuse classification attached to an access."""

    DEFAULT = 0
    HIGH = 1
    MODERATE = 2
    LOW = 3


_HINTS = tuple(ReuseHint)


class MemoryAccess(NamedTuple):
    """One byte-addressed LLC reference."""

    address: int
    pc_signature: int = 0
    is_write: bool = False
    reuse_hint: ReuseHint = ReuseHint.DEFAULT
    hint_valid: bool = False
    inst_delta: int = 1


def fold_pc(pc: int) -> int:
    """Fold an arbitrary-width instruction address to a 14-bit signature (xor of 14-bit slices)."""
    if pc < 0:
        raise InvalidSpecError(f"PC must be non-negative, got {pc}")
    sig = 0
    while pc:
        sig ^= pc & PC_MASK
        pc >>= PC_BITS
    return sig


def _encode_flags(is_write: bool, hint: int, hint_valid: bool) -> int:
    flags = FLAG_WRITE if is_write else 0
    if hint_valid:
        flags |= FLAG_HINT_VALID | (int(hint) << HINT_SHIFT)
    return flags


class Trace:
    """
    An immutable, ordered sequence of MemoryAccess records.

    Stored as a packed numpy record array in exactly the on-disk layout, so
    reading and writing are a header plus one buffer copy.
    """

    __slots__ = ("_records",)

    def __init__(self, records: np.ndarray) -> None:
        if records.dtype != RECORD_DTYPE:
            raise InvalidSpecError(f"Trace records must use RECORD_DTYPE, got {records.dtype}")
        if np.any(records["pc"] > PC_MASK):
            raise InvalidSpecError("pc_signature must fit in 14 bits")
        flags = records["flags"]
        if np.any(((flags & FLAG_HINT_VALID) == 0) & ((flags & HINT_MASK) != 0)):
            raise InvalidSpecError("reuse_hint set on a record whose hint_valid bit is clear")
        records = records.copy()
        records.setflags(write=False)
        self._records = records

    # ------------------------------------------------------------------
    # Alternate constructors
    # ------------------------------------------------------------------

    @classmethod
    def empty(cls) -> Trace:
        return cls(np.zeros(0, dtype=RECORD_DTYPE))

    @classmethod
    def from_accesses(cls, accesses: Iterable[MemoryAccess]) -> Trace:
        accesses = list(accesses)
        rows = [
            (a.address, a.pc_signature, _encode_flags(a.is_write, a.reuse_hint, a.hint_valid), 0, a.inst_delta)
            for a in accesses
        ]
        for a, src in zip(rows, accesses):
            if not src.hint_valid and src.reuse_hint != ReuseHint.DEFAULT:
                raise InvalidSpecError("reuse_hint must be DEFAULT when hint_valid is false")
            if a[0] < 0:
                raise InvalidSpecError(f"Address must be non-negative, got {a[0]}")
            if a[1] > PC_MASK or a[1] < 0:
                raise InvalidSpecError(f"pc_signature {a[1]} does not fit in 14 bits")
        return cls(np.array(rows, dtype=RECORD_DTYPE))

    @classmethod
    def from_arrays(
        cls,
        addresses: np.ndarray,
        pc: "int | np.ndarray" = 0,
        is_write: "bool | np.ndarray" = False,
        hints: "np.ndarray | None" = None,
        inst_delta: "int | np.ndarray" = 1,
    ) -> Trace:
        """Build a trace from parallel arrays; scalars broadcast. `hints` marks every record hint-valid."""
        addresses = np.asarray(addresses)
        if addresses.size and addresses.min() < 0:
            raise InvalidSpecError("Addresses must be non-negative")
        records = np.zeros(addresses.shape[0], dtype=RECORD_DTYPE)
        records["address"] = addresses
        pcs = np.asarray(pc)
        if pcs.size and (pcs.min() < 0 or pcs.max() > PC_MASK):
            raise InvalidSpecError("pc_signature does not fit in 14 bits")
        records["pc"] = pcs
        flags = np.where(np.asarray(is_write, dtype=bool), FLAG_WRITE, 0).astype(np.uint8)
        if hints is not None:
            flags = flags | FLAG_HINT_VALID | (np.asarray(hints, dtype=np.uint8) << HINT_SHIFT)
        records["flags"] = flags
        records["inst_delta"] = inst_delta
        return cls(records)

    # ------------------------------------------------------------------
    # Properties
    # ------------------------------------------------------------------

    @property
    def records(self) -> np.ndarray:
        """The read-only packed record array."""
        return self._records

    @property
    def addresses(self) -> np.ndarray:
        return self._records["address"]

    @property
    def pcs(self) -> np.ndarray:
        return self._records["pc"]

    @property
    def flags(self) -> np.ndarray:
        return self._records["flags"]

    @property
    def total_instructions(self) -> int:
        return int(self._records["inst_delta"].sum(dtype=np.uint64))

    @property
    def has_hints(self) -> bool:
        return bool(np.any(self.flags & FLAG_HINT_VALID))

    def digest(self) -> str:
        """Short content hash identifying this trace in reports."""
        return hashlib.sha1(self._records.tobytes()).hexdigest()[:12]

    def with_hints(self, hints: np.ndarray) -> Trace:
        """Copy of this trace with every record hint-valid and carrying `hints`."""
        records = self._records.copy()
        flags = records["flags"] & ~np.uint8(HINT_MASK | FLAG_HINT_VALID)
        records["flags"] = flags | FLAG_HINT_VALID | (np.asarray(hints, dtype=np.uint8) << HINT_SHIFT)
        return Trace(records)

    def select(self, mask: np.ndarray) -> Trace:
        return Trace(self._records[mask])

    # ------------------------------------------------------------------
    # Sequence protocol
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return int(self._records.shape[0])

    def __iter__(self) -> Iterator[MemoryAccess]:
        r = self._records
        hints = _HINTS
        for address, pc, flags, delta in zip(
            r["address"].tolist(), r["pc"].tolist(), r["flags"].tolist(), r["inst_delta"].tolist()
        ):
            yield MemoryAccess(
                address,
                pc,
                bool(flags & FLAG_WRITE),
                hints[(flags & HINT_MASK) >> HINT_SHIFT],
                bool(flags & FLAG_HINT_VALID),
                delta,
            )

    def __getitem__(self, index: int) -> MemoryAccess:
        rec = self._records[index]
        flags = int(rec["flags"])
        return MemoryAccess(
            int(rec["address"]),
            int(rec["pc"]),
            bool(flags & FLAG_WRITE),
            _HINTS[(flags & HINT_MASK) >> HINT_SHIFT],
            bool(flags & FLAG_HINT_VALID),
            int(rec["inst_delta"]),
        )

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Trace):
            return np.array_equal(self._records, other._records)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._records.tobytes())

    def __repr__(self) -> str:
        return f"Trace({len(self)} records, {self.total_instructions} instructions)"


# ---------------------------------------------------------------------------
# On-disk format
# ---------------------------------------------------------------------------

def write_trace(trace: Trace, path: PathLike) -> None:
    """Write `trace` as a little-endian CTR1 file."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TRACE_MAGIC, TRACE_VERSION, _RESERVED, len(trace)))
        fh.write(trace.records.tobytes())
    logger.info("wrote %d trace records to %s", len(trace), path)


def read_trace(path: PathLike) -> Trace:
    """Read a CTR1 file; bad magic, wrong version and short files raise distinct errors."""
    data = Path(path).read_bytes()
    if len(data) < TRACE_HEADER_BYTES:
        if len(data) >= 4 and data[:4] != TRACE_MAGIC:
            raise BadMagicError(f"{path}: bad magic {data[:4]!r}, expected {TRACE_MAGIC!r}")
        raise TruncatedDataError(f"{path}: {len(data)} bytes is shorter than the trace header")
    magic, version, reserved, count = _HEADER.unpack_from(data)
    if magic != TRACE_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {TRACE_MAGIC!r}")
    if version != TRACE_VERSION:
        raise VersionMismatchError(f"{path}: trace version {version}, this reader supports {TRACE_VERSION}")
    if reserved != _RESERVED:
        raise FormatError(f"{path}: reserved header bytes must be zero, got {reserved.hex()}")
    expected = TRACE_HEADER_BYTES + TRACE_RECORD_BYTES * count
    if len(data) < expected:
        raise TruncatedDataError(
            f"{path}: header declares {count} records but only "
            f"{(len(data) - TRACE_HEADER_BYTES) // TRACE_RECORD_BYTES} are present"
        )
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes after {count} records")
    records = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=TRACE_HEADER_BYTES)
    try:
        return Trace(records)
    except InvalidSpecError as exc:
        raise FormatError(f"{path}: {exc}") from None
