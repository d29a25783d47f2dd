"""
Vertex reordering.

Every skew-aware technique here is one stable grouping pass: vertices are
binned by degree into contiguous descending ranges, and new IDs are handed
out group by group, hottest first, keeping the original relative order
inside each group. DBG uses a handful of geometric ranges around the average
degree; Sort, HubSort and HubCluster are the same pass with finer or coarser
ranges. Random RV / RCB-n reorderings are the locality-destroying baselines.
"""
from __future__ import annotations

import enum
import logging
import struct
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ._data import DBG_RANGES, PROP_BYTES
from ._errors import FormatError, InvalidSpecError, TruncatedDataError
from .graph import CsrGraph, DegreeKind, degrees

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_U64 = struct.Struct("<Q")


class ReorderKind(enum.Enum):
    SORT = "sort"
    HUB_SORT = "hubsort"
    HUB_CLUSTER = "hubcluster"
    DBG = "dbg"


# ---------------------------------------------------------------------------
# Grouping
# ---------------------------------------------------------------------------

class GroupingSpec:
    """
    K half-open degree ranges [lo, hi), hottest first. hi of the first range
    may be infinite; every following range ends where the previous one starts.
    """

    __slots__ = ("_lows", "_highs")

    def __init__(self, ranges: Sequence[tuple[float, Optional[float]]]) -> None:
        if not ranges:
            raise InvalidSpecError("a grouping needs at least one range")
        lows, highs = [], []
        for lo, hi in ranges:
            hi = np.inf if hi is None else float(hi)
            if not lo < hi:
                raise InvalidSpecError(f"empty degree range [{lo}, {hi})")
            lows.append(float(lo))
            highs.append(hi)
        for k in range(1, len(lows)):
            if highs[k] != lows[k - 1]:
                raise InvalidSpecError(
                    f"ranges must be contiguous and descending: [{lows[k]}, {highs[k]}) "
                    f"does not end at {lows[k - 1]}"
                )
        self._lows = tuple(lows)
        self._highs = tuple(highs)

    @classmethod
    def dbg(cls, avg_degree: float, multiples=DBG_RANGES) -> GroupingSpec:
        """Geometric ranges expressed as multiples of the average degree."""
        if avg_degree <= 0:
            return cls([(0.0, None)])
        return cls([(lo * avg_degree, None if hi is None else hi * avg_degree) for lo, hi in multiples])

    @classmethod
    def hub_cluster(cls, avg_degree: float) -> GroupingSpec:
        if avg_degree <= 0:
            return cls([(0.0, None)])
        return cls([(avg_degree, None), (0.0, avg_degree)])

    @classmethod
    def sort(cls, degree_values) -> GroupingSpec:
        """One group per distinct degree value."""
        distinct = np.unique(np.asarray(degree_values))[::-1]
        if distinct.size == 0:
            return cls([(0.0, None)])
        bounds = [None] + [float(d) for d in distinct]
        ranges = list(zip(bounds[1:], bounds[:-1]))
        ranges[-1] = (0.0, ranges[-1][1])
        return cls(ranges)

    @classmethod
    def hub_sort(cls, degree_values, avg_degree: float) -> GroupingSpec:
        """One group per distinct hot degree value, then a single cold group [0, avg)."""
        values = np.asarray(degree_values)
        hot = np.unique(values[values >= avg_degree])[::-1]
        if hot.size == 0 or avg_degree <= 0:
            return cls([(0.0, None)])
        bounds = [None] + [float(d) for d in hot]
        ranges = list(zip(bounds[1:], bounds[:-1]))
        ranges[-1] = (float(avg_degree), ranges[-1][1])
        ranges.append((0.0, float(avg_degree)))
        return cls(ranges)

    @property
    def ranges(self) -> list[tuple[float, float]]:
        return list(zip(self._lows, self._highs))

    def __len__(self) -> int:
        return len(self._lows)

    def covers(self, degree_values) -> bool:
        values = np.asarray(degree_values)
        return values.size == 0 or (values.min() >= self._lows[-1] and values.max() < self._highs[0])

    def group_of(self, degree_values) -> np.ndarray:
        """Group index (0 = hottest) of every degree."""
        values = np.asarray(degree_values, dtype=np.float64)
        assert self.covers(values), "degree outside every grouping range"
        ascending = np.array(self._lows[::-1])
        return len(self._lows) - np.searchsorted(ascending, values, side="right")

    def __repr__(self) -> str:
        return "GroupingSpec(" + ", ".join(f"[{lo:g}, {hi:g})" for lo, hi in self.ranges) + ")"


# ---------------------------------------------------------------------------
# Remaps
# ---------------------------------------------------------------------------

class VertexRemap:
    """Bijection old ID -> new ID over [0, V)."""

    __slots__ = ("_mapping",)

    def __init__(self, mapping) -> None:
        mapping = np.ascontiguousarray(mapping, dtype=np.int64)
        v = mapping.size
        if mapping.ndim != 1 or (v and (mapping.min() < 0 or mapping.max() >= v)) \
                or np.unique(mapping).size != v:
            raise InvalidSpecError("vertex remap is not a bijection over [0, V)")
        mapping.setflags(write=False)
        self._mapping = mapping

    @classmethod
    def identity(cls, num_vertices: int) -> VertexRemap:
        return cls(np.arange(num_vertices))

    @classmethod
    def from_order(cls, order) -> VertexRemap:
        """Remap giving new ID i to the old vertex order[i]."""
        order = np.asarray(order, dtype=np.int64)
        mapping = np.empty_like(order)
        mapping[order] = np.arange(order.size)
        return cls(mapping)

    @property
    def mapping(self) -> np.ndarray:
        return self._mapping

    @property
    def order(self) -> np.ndarray:
        """Old IDs in new-ID order."""
        order = np.empty_like(self._mapping)
        order[self._mapping] = np.arange(self._mapping.size)
        return order

    def inverse(self) -> VertexRemap:
        return VertexRemap(self.order)

    def __len__(self) -> int:
        return self._mapping.size

    def __getitem__(self, old):
        return self._mapping[old]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, VertexRemap):
            return np.array_equal(self._mapping, other._mapping)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._mapping.tobytes())

    def __repr__(self) -> str:
        return f"VertexRemap(V={len(self)})"


def write_remap(remap: VertexRemap, path: PathLike) -> None:
    """u64 V followed by u64 M[V], little-endian."""
    with open(path, "wb") as fh:
        fh.write(_U64.pack(len(remap)))
        fh.write(remap.mapping.astype("<u8").tobytes())
    logger.info("wrote %r to %s", remap, path)


def read_remap(path: PathLike) -> VertexRemap:
    data = Path(path).read_bytes()
    if len(data) < _U64.size:
        raise TruncatedDataError(f"{path}: {len(data)} bytes is shorter than the remap header")
    (v,) = _U64.unpack_from(data)
    expected = _U64.size * (v + 1)
    if len(data) < expected:
        raise TruncatedDataError(f"{path}: header declares {v} vertices but the file holds {len(data)} bytes")
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes after the mapping")
    mapping = np.frombuffer(data, dtype="<u8", offset=_U64.size)
    try:
        return VertexRemap(mapping.astype(np.int64))
    except InvalidSpecError as exc:
        raise FormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Reorderings
# ---------------------------------------------------------------------------

def dbg_reorder(
    graph: CsrGraph,
    spec: Optional[GroupingSpec] = None,
    degree_kind: "DegreeKind | str" = DegreeKind.OUT,
) -> VertexRemap:
    """
    Degree-Based Grouping: one stable pass appending each vertex to its group,
    then IDs assigned group by group. spec defaults to DBG's geometric ranges.
    """
    d = degrees(graph, degree_kind)
    if spec is None:
        spec = GroupingSpec.dbg(d.mean() if d.size else 0.0)
    if not spec.covers(d):
        raise InvalidSpecError(f"{spec!r} does not cover degrees {int(d.min())}..{int(d.max())}")
    groups = spec.group_of(d)
    order = np.argsort(groups, kind="stable")
    remap = VertexRemap.from_order(order)
    logger.info(
        "grouped %d vertices into %d of %d groups", d.size, np.unique(groups).size, len(spec),
    )
    return remap


def family_reorder(
    graph: CsrGraph,
    kind: "ReorderKind | str" = ReorderKind.DBG,
    degree_kind: "DegreeKind | str" = DegreeKind.OUT,
) -> VertexRemap:
    """Sort, HubSort, HubCluster or DBG expressed as a grouping."""
    kind = ReorderKind(kind)
    d = degrees(graph, degree_kind)
    avg = float(d.mean()) if d.size else 0.0
    if kind is ReorderKind.SORT:
        spec = GroupingSpec.sort(d)
    elif kind is ReorderKind.HUB_SORT:
        spec = GroupingSpec.hub_sort(d, avg)
    elif kind is ReorderKind.HUB_CLUSTER:
        spec = GroupingSpec.hub_cluster(avg)
    else:
        spec = GroupingSpec.dbg(avg)
    logger.debug("%s grouping: %d ranges", kind.value, len(spec))
    return dbg_reorder(graph, spec, degree_kind)


def random_reorder(
    graph: CsrGraph,
    granularity_blocks: int = 0,
    seed: int = 0,
    prop_bytes: int = PROP_BYTES,
    block_bytes: int = 64,
) -> VertexRemap:
    """
    RV (granularity 0): uniform random permutation. RCB-n: runs of
    n * block_bytes / prop_bytes consecutive vertices shuffled as units.
    """
    if granularity_blocks < 0:
        raise InvalidSpecError(f"granularity must be >= 0, got {granularity_blocks}")
    if prop_bytes < 1 or block_bytes % prop_bytes:
        raise InvalidSpecError(f"prop_bytes {prop_bytes} must divide block_bytes {block_bytes}")
    v = graph.num_vertices
    rng = np.random.default_rng(seed)
    if granularity_blocks == 0:
        return VertexRemap.from_order(rng.permutation(v))
    run = granularity_blocks * (block_bytes // prop_bytes)
    runs = -(-v // run)
    starts = rng.permutation(runs) * run
    order = (starts[:, None] + np.arange(run)).ravel()
    return VertexRemap.from_order(order[order < v])


def apply_remap(graph: CsrGraph, remap: VertexRemap) -> CsrGraph:
    """Relabel every vertex; neighbour lists come out sorted."""
    if len(remap) != graph.num_vertices:
        raise InvalidSpecError(f"remap covers {len(remap)} vertices, graph has {graph.num_vertices}")
    src, dst = graph.edge_pairs()
    m = remap.mapping
    return CsrGraph.from_edges(m[src], m[dst], graph.num_vertices, graph.direction)


def adjacency_preservation(remap: VertexRemap) -> float:
    """Fraction of consecutive old-ID pairs (v, v+1) that are still consecutive afterwards."""
    m = remap.mapping
    if m.size < 2:
        return 1.0
    return float(np.mean(m[1:] == m[:-1] + 1))
