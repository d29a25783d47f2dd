"""
CSR graphs, degree skew metrics, synthetic graph generators and the
graph-analytic trace generator.

A CsrGraph stores, for every vertex, its neighbour list in one Edge array
indexed by a Vertex offset array. An "in" graph lists each vertex's
in-neighbours (the layout pull-style kernels iterate over), an "out" graph
its out-neighbours.
"""
from __future__ import annotations

import enum
import logging
import struct
from pathlib import Path
from typing import NamedTuple, Optional, Union

import networkx as nx
import numpy as np

from ._data import (
    CSR_MAGIC,
    EDGE_ELEMENT_BYTES,
    GRAPH_PCS,
    GRAPH_PROP_BASE,
    PROP_BYTES,
    VERTEX_ELEMENT_BYTES,
)
from ._errors import (
    BadMagicError,
    FormatError,
    GraphFormatError,
    InfeasibleDegreeSequence,
    InvalidSpecError,
    TruncatedDataError,
)
from .grasp import AddressBoundRegister, RegionMap, annotate_hints
from .trace import Trace

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_CSR_HEADER = struct.Struct("<4sQQ")

_MAX_VERTEX_ID = (1 << 63) - 1


class Direction(enum.Enum):
    IN = "in"
    OUT = "out"

    @property
    def flipped(self) -> Direction:
        return Direction.OUT if self is Direction.IN else Direction.IN


class DegreeKind(enum.Enum):
    IN = "in"
    OUT = "out"
    SUM = "sum"


class CsrGraph:
    """
    Immutable CSR graph.

    offsets has V+1 non-decreasing entries from 0 to E; edges holds E vertex
    IDs below V. Row v is the neighbour list edges[offsets[v]:offsets[v+1]].
    """

    __slots__ = ("_offsets", "_edges", "_direction")

    def __init__(self, offsets, edges, direction: "Direction | str" = Direction.IN) -> None:
        offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        edges = np.ascontiguousarray(edges, dtype=np.int64)
        if offsets.ndim != 1 or offsets.size < 1:
            raise InvalidSpecError("offsets must be a 1-D array of V+1 entries")
        if offsets[0] != 0 or offsets[-1] != edges.size:
            raise InvalidSpecError(f"offsets must run from 0 to E={edges.size}, got {offsets[0]}..{offsets[-1]}")
        if np.any(np.diff(offsets) < 0):
            raise InvalidSpecError("offsets must be non-decreasing")
        v = offsets.size - 1
        if edges.size and (edges.min() < 0 or edges.max() >= v):
            raise InvalidSpecError(f"edge endpoints must lie in [0, {v})")
        offsets.setflags(write=False)
        edges.setflags(write=False)
        self._offsets = offsets
        self._edges = edges
        self._direction = Direction(direction)

    @classmethod
    def from_edges(
        cls,
        src,
        dst,
        num_vertices: int,
        direction: "Direction | str" = Direction.IN,
        sort_adjacency: bool = True,
    ) -> CsrGraph:
        """
        Build from parallel (src, dst) arrays. An IN graph groups edges by
        destination, an OUT graph by source; with sort_adjacency every
        neighbour list is ascending, otherwise in input order.
        """
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        direction = Direction(direction)
        keys, nbrs = (dst, src) if direction is Direction.IN else (src, dst)
        if keys.size and (min(keys.min(), nbrs.min()) < 0 or max(keys.max(), nbrs.max()) >= num_vertices):
            raise InvalidSpecError(f"edge endpoints must lie in [0, {num_vertices})")
        if sort_adjacency:
            order = np.lexsort((nbrs, keys))
        else:
            order = np.argsort(keys, kind="stable")
        counts = np.bincount(keys, minlength=num_vertices)
        offsets = np.concatenate(([0], np.cumsum(counts)))
        return cls(offsets, nbrs[order], direction)

    # ------------------------------------------------------------------
    # Properties
    # ------------------------------------------------------------------

    @property
    def offsets(self) -> np.ndarray:
        return self._offsets

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def direction(self) -> Direction:
        return self._direction

    @property
    def num_vertices(self) -> int:
        return self._offsets.size - 1

    @property
    def num_edges(self) -> int:
        return self._edges.size

    @property
    def avg_degree(self) -> float:
        return self.num_edges / self.num_vertices if self.num_vertices else 0.0

    def neighbors(self, v: int) -> np.ndarray:
        return self._edges[self._offsets[v]:self._offsets[v + 1]]

    def row_degrees(self) -> np.ndarray:
        """Length of every neighbour list."""
        return np.diff(self._offsets)

    def owners(self) -> np.ndarray:
        """For every edge slot, the vertex whose list it belongs to."""
        return np.repeat(np.arange(self.num_vertices, dtype=np.int64), self.row_degrees())

    def edge_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) arrays of every edge."""
        owners = self.owners()
        if self._direction is Direction.IN:
            return self._edges.copy(), owners
        return owners, self._edges.copy()

    def transpose(self) -> CsrGraph:
        """The same edges laid out by the other endpoint."""
        src, dst = self.edge_pairs()
        return CsrGraph.from_edges(src, dst, self.num_vertices, self._direction.flipped)

    def canonical(self) -> CsrGraph:
        """Same graph with every neighbour list sorted."""
        src, dst = self.edge_pairs()
        return CsrGraph.from_edges(src, dst, self.num_vertices, self._direction)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, CsrGraph):
            return (
                self._direction == other._direction
                and np.array_equal(self._offsets, other._offsets)
                and np.array_equal(self._edges, other._edges)
            )
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._direction, self._offsets.tobytes(), self._edges.tobytes()))

    def __repr__(self) -> str:
        return f"CsrGraph(V={self.num_vertices}, E={self.num_edges}, direction={self._direction.value!r})"


def degrees(graph: CsrGraph, kind: "DegreeKind | str" = DegreeKind.OUT) -> np.ndarray:
    """Per-vertex in-, out- or total degree."""
    kind = DegreeKind(kind)
    row = graph.row_degrees()
    col = np.bincount(graph.edges, minlength=graph.num_vertices)
    if kind is DegreeKind.SUM:
        return row + col
    if (kind is DegreeKind.IN) == (graph.direction is Direction.IN):
        return row
    return col


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def load_edge_list(
    path: PathLike,
    direction: "Direction | str" = Direction.IN,
    num_vertices: Optional[int] = None,
    compact: bool = False,
    sort_adjacency: bool = True,
) -> CsrGraph:
    """
    Load a text edge list: one "src dst" pair per line, '#' starts a comment.

    IDs are used as-is (V = max ID + 1, or num_vertices) unless compact is
    set, in which case the distinct IDs are relabelled 0..V-1 in ascending order.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        if len(tokens) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 'src dst', got {line.strip()!r}")
        rows.append(tokens)
    try:
        ids = [(int(a), int(b)) for a, b in rows]
    except ValueError as exc:
        raise GraphFormatError(f"{path}: non-integer vertex ID ({exc})") from None
    if any(not 0 <= x <= _MAX_VERTEX_ID for pair in ids for x in pair):
        raise GraphFormatError(f"{path}: vertex IDs must lie in [0, 2^63)")
    pairs = np.array(ids, dtype=np.int64).reshape(-1, 2)
    src, dst = pairs[:, 0], pairs[:, 1]

    if compact:
        labels, inverse = np.unique(pairs, return_inverse=True)
        inverse = inverse.reshape(-1, 2)
        src, dst = inverse[:, 0], inverse[:, 1]
        v = labels.size if num_vertices is None else num_vertices
    else:
        v = int(pairs.max()) + 1 if pairs.size else 0
        if num_vertices is not None:
            if num_vertices < v:
                raise GraphFormatError(f"{path}: vertex ID {v - 1} does not fit in {num_vertices} vertices")
            v = num_vertices
    graph = CsrGraph.from_edges(src, dst, v, direction, sort_adjacency)
    logger.info("loaded %s from %s", graph, path)
    return graph


def write_csr(graph: CsrGraph, path: PathLike) -> None:
    """Binary CSR: magic, u64 V, u64 E, u64 offsets[V+1], u64 edges[E], little-endian."""
    with open(path, "wb") as fh:
        fh.write(_CSR_HEADER.pack(CSR_MAGIC, graph.num_vertices, graph.num_edges))
        fh.write(graph.offsets.astype("<u8").tobytes())
        fh.write(graph.edges.astype("<u8").tobytes())
    logger.info("wrote %s to %s", graph, path)


def read_csr(path: PathLike, direction: "Direction | str" = Direction.IN) -> CsrGraph:
    """Read a binary CSR file; the file does not record direction, so the caller states it."""
    data = Path(path).read_bytes()
    if len(data) >= 4 and data[:4] != CSR_MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}, expected {CSR_MAGIC!r}")
    if len(data) < _CSR_HEADER.size:
        raise TruncatedDataError(f"{path}: {len(data)} bytes is shorter than the CSR header")
    _, v, e = _CSR_HEADER.unpack_from(data)
    expected = _CSR_HEADER.size + 8 * (v + 1 + e)
    if len(data) < expected:
        raise TruncatedDataError(f"{path}: header declares V={v}, E={e} but the file holds {len(data)} bytes")
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes after the edge array")
    body = np.frombuffer(data, dtype="<u8", offset=_CSR_HEADER.size)
    if body.size and body.max() > _MAX_VERTEX_ID:
        raise FormatError(f"{path}: offset or vertex ID overflows a signed 64-bit integer")
    try:
        return CsrGraph(body[:v + 1], body[v + 1:], direction)
    except InvalidSpecError as exc:
        raise FormatError(f"{path}: inconsistent CSR arrays ({exc})") from None


# ---------------------------------------------------------------------------
# Skew
# ---------------------------------------------------------------------------

class SkewMetrics(NamedTuple):
    hot_fraction: float
    hot_edge_coverage: float
    avg_hot_per_block: float
    hot_footprint_bytes: int


def skew_metrics(
    graph: CsrGraph,
    prop_bytes: int = PROP_BYTES,
    block_bytes: int = 64,
    degree_kind: "DegreeKind | str" = DegreeKind.OUT,
) -> SkewMetrics:
    """
    Hot vertices have degree >= the average degree. avg_hot_per_block counts
    only blocks of the Property Array that hold at least one hot vertex, under
    the current vertex order.
    """
    if prop_bytes < 1 or block_bytes % prop_bytes:
        raise InvalidSpecError(f"prop_bytes {prop_bytes} must divide block_bytes {block_bytes}")
    d = degrees(graph, degree_kind)
    if d.size == 0:
        return SkewMetrics(0.0, 0.0, 0.0, 0)
    hot = d >= d.mean()
    total = d.sum()
    per_block = block_bytes // prop_bytes
    hot_ids = np.flatnonzero(hot)
    blocks = np.bincount(hot_ids // per_block)
    occupied = blocks[blocks > 0]
    return SkewMetrics(
        hot_fraction=float(hot.mean()),
        hot_edge_coverage=float(d[hot].sum() / total) if total else 0.0,
        avg_hot_per_block=float(occupied.mean()) if occupied.size else 0.0,
        hot_footprint_bytes=int(occupied.size * block_bytes),
    )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _expected_degrees(v_count: int, avg_degree: float, skew_alpha: float, cap: float) -> np.ndarray:
    """Power-law expected degrees (rank i gets weight (i+1)^(-1/(alpha-1))), capped, with mean avg_degree."""
    w = (np.arange(v_count) + 1.0) ** (-1.0 / (skew_alpha - 1.0))
    for _ in range(50):
        w = np.minimum(w * (avg_degree / w.mean()), cap)
        if abs(w.mean() - avg_degree) < 1e-9 * avg_degree:
            break
    return w


def synth_powerlaw(
    v_count: int,
    avg_degree: float,
    skew_alpha: float,
    seed: int = 0,
    max_degree: Optional[int] = None,
) -> CsrGraph:
    """
    Undirected power-law graph stored as a symmetric IN graph.

    Degrees are Poisson draws around power-law expected degrees with mean
    avg_degree, truncated at max_degree (default sqrt(V * avg_degree)).
    Stubs are paired at random; self-loops and duplicate edges are dropped,
    so realized degrees can fall slightly below the drawn sequence. Vertex IDs
    are shuffled so degree does not follow ID order.
    """
    if v_count < 2:
        raise InvalidSpecError(f"v_count must be >= 2, got {v_count}")
    if avg_degree < 1:
        raise InvalidSpecError(f"avg_degree must be >= 1, got {avg_degree}")
    if skew_alpha <= 1:
        raise InvalidSpecError(f"skew_alpha must be > 1, got {skew_alpha}")
    cap = max_degree if max_degree is not None else max(avg_degree, np.sqrt(v_count * avg_degree))
    cap = min(cap, v_count - 1)
    if cap < avg_degree:
        raise InfeasibleDegreeSequence(f"max degree {cap} is below the requested average {avg_degree}")
    rng = np.random.default_rng(seed)

    w = _expected_degrees(v_count, avg_degree, skew_alpha, cap)
    seq = np.minimum(rng.poisson(w), int(cap))
    if seq.sum() % 2:
        candidates = np.flatnonzero(seq < cap)
        if candidates.size == 0:
            raise InvalidSpecError(
                f"odd stub count with every vertex at max degree {int(cap)}; raise max_degree or change v_count"
            )
        seq[candidates[rng.integers(candidates.size)]] += 1
    if not nx.is_graphical(seq.tolist()):
        raise InfeasibleDegreeSequence(f"degree sequence for V={v_count}, alpha={skew_alpha} is not graphical")

    stubs = np.repeat(np.arange(v_count, dtype=np.int64), seq)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)

    labels = rng.permutation(v_count)
    u, v = labels[pairs[:, 0]], labels[pairs[:, 1]]
    graph = CsrGraph.from_edges(np.concatenate((u, v)), np.concatenate((v, u)), v_count, Direction.IN)
    logger.info(
        "synth_powerlaw: %s (drawn %d stubs, kept %d undirected edges, max degree %d)",
        graph, int(seq.sum()), pairs.shape[0], int(graph.row_degrees().max()),
    )
    return graph


def synth_uniform(v_count: int, degree: int, seed: int = 0) -> CsrGraph:
    """IN graph in which every vertex has exactly `degree` in-neighbours drawn uniformly (excluding itself)."""
    if v_count < 2:
        raise InvalidSpecError(f"v_count must be >= 2, got {v_count}")
    if degree < 0:
        raise InvalidSpecError(f"degree must be >= 0, got {degree}")
    rng = np.random.default_rng(seed)
    dst = np.repeat(np.arange(v_count, dtype=np.int64), degree)
    src = rng.integers(0, v_count - 1, size=dst.size)
    src += src >= dst
    return CsrGraph.from_edges(src, dst, v_count, Direction.IN)


# ---------------------------------------------------------------------------
# Graph-analytic LLC traces
# ---------------------------------------------------------------------------

class GraphLayout(NamedTuple):
    """Base addresses of the arrays a vertex-centric kernel touches."""

    src_prop: int
    dst_prop: int
    vertex: int
    edge: int
    end: int


def graph_layout(
    graph: CsrGraph,
    prop_bytes: int = PROP_BYTES,
    prop_base_address: int = GRAPH_PROP_BASE,
    block_bytes: int = 64,
    dst_array: bool = True,
) -> GraphLayout:
    """Property array(s) first, then the Vertex and Edge arrays, each starting on a block boundary."""

    def align(addr: int) -> int:
        return -(-addr // block_bytes) * block_bytes

    v = graph.num_vertices
    src = prop_base_address
    dst = align(src + v * prop_bytes) if dst_array else src
    vertex = align(dst + v * prop_bytes)
    edge = align(vertex + (v + 1) * VERTEX_ELEMENT_BYTES)
    return GraphLayout(src, dst, vertex, edge, edge + graph.num_edges * EDGE_ELEMENT_BYTES)


def gen_graph_trace(
    graph: CsrGraph,
    prop_bytes: int = PROP_BYTES,
    prop_base_address: int = GRAPH_PROP_BASE,
    mode: str = "pull",
    block_bytes: int = 64,
    iterations: int = 1,
    dst_array: bool = True,
    hint_capacity: Optional[int] = None,
) -> tuple[Trace, list[AddressBoundRegister]]:
    """
    LLC reference stream of `iterations` passes of a vertex-centric kernel.

    For every vertex v in ID order: one Vertex-array access, one access per
    Edge-array block first touched by v's neighbour list, then

      pull (IN graph):  a read of prop[u] per neighbour u, then a write of v's result;
      push (OUT graph): a read of prop[v], then a write of the result of every neighbour u.

    Results go to a separate destination array when dst_array is set. Returns the
    trace and the ABR of the irregularly accessed Property Array. With
    hint_capacity (the LLC size in bytes) every record carries its ABR reuse hint.
    """
    if mode not in ("pull", "push"):
        raise InvalidSpecError(f"mode must be pull or push, got {mode!r}")
    wanted = Direction.IN if mode == "pull" else Direction.OUT
    if graph.direction is not wanted:
        raise InvalidSpecError(f"{mode} traces need an {wanted.value}-edge CSR, got {graph.direction.value}")
    if iterations < 1:
        raise InvalidSpecError(f"iterations must be >= 1, got {iterations}")
    if prop_bytes < 1:
        raise InvalidSpecError(f"prop_bytes must be >= 1, got {prop_bytes}")

    layout = graph_layout(graph, prop_bytes, prop_base_address, block_bytes, dst_array)
    v_count = graph.num_vertices
    e_count = graph.num_edges
    deg = graph.row_degrees()
    owners = graph.owners()
    vertex_ids = np.arange(v_count, dtype=np.int64)

    # Edge-array blocks: each is emitted once, by the vertex whose list first reaches it.
    edge_addr = layout.edge + np.arange(e_count, dtype=np.int64) * EDGE_ELEMENT_BYTES
    edge_block = edge_addr // block_bytes
    first_in_block = np.ones(e_count, dtype=bool)
    first_in_block[1:] = edge_block[1:] != edge_block[:-1]
    new_blocks = np.flatnonzero(first_in_block)
    block_owner = owners[new_blocks]
    eb = np.bincount(block_owner, minlength=v_count)

    seg_len = 2 + eb + deg
    seg_start = np.cumsum(seg_len) - seg_len
    n = int(seg_len.sum())
    addresses = np.zeros(n, dtype=np.uint64)
    pcs = np.zeros(n, dtype=np.uint16)
    writes = np.zeros(n, dtype=bool)

    addresses[seg_start] = layout.vertex + vertex_ids * VERTEX_ELEMENT_BYTES
    pcs[seg_start] = GRAPH_PCS["vertex"]

    eb_start = np.cumsum(eb) - eb
    rank = np.arange(new_blocks.size, dtype=np.int64) - eb_start[block_owner]
    pos = seg_start[block_owner] + 1 + rank
    addresses[pos] = edge_block[new_blocks] * block_bytes
    pcs[pos] = GRAPH_PCS["edge"]

    own_pos = seg_start + 1 + eb
    nbr_rank = np.arange(e_count, dtype=np.int64) - graph.offsets[:-1][owners]
    nbr = graph.edges
    if mode == "pull":
        nbr_pos = own_pos[owners] + nbr_rank
        addresses[nbr_pos] = layout.src_prop + nbr * prop_bytes
        pcs[nbr_pos] = GRAPH_PCS["prop_read"]
        last = own_pos + deg
        addresses[last] = layout.dst_prop + vertex_ids * prop_bytes
        pcs[last] = GRAPH_PCS["prop_write"]
        writes[last] = True
        abr = AddressBoundRegister(layout.src_prop, layout.src_prop + v_count * prop_bytes)
    else:
        addresses[own_pos] = layout.src_prop + vertex_ids * prop_bytes
        pcs[own_pos] = GRAPH_PCS["prop_read"]
        nbr_pos = own_pos[owners] + 1 + nbr_rank
        addresses[nbr_pos] = layout.dst_prop + nbr * prop_bytes
        pcs[nbr_pos] = GRAPH_PCS["prop_write"]
        writes[nbr_pos] = True
        abr = AddressBoundRegister(layout.dst_prop, layout.dst_prop + v_count * prop_bytes)

    if iterations > 1:
        addresses = np.tile(addresses, iterations)
        pcs = np.tile(pcs, iterations)
        writes = np.tile(writes, iterations)
    trace = Trace.from_arrays(addresses, pcs, writes)
    abrs = [abr] if v_count else []
    if hint_capacity is not None:
        trace = annotate_hints(trace, RegionMap(abrs, hint_capacity))
    logger.info("%s trace of %s: %d records, ABR %s", mode, graph, len(trace),
                [f"{a.start:#x}:{a.end:#x}" for a in abrs])
    return trace, abrs


# ---------------------------------------------------------------------------
# Reference kernel
# ---------------------------------------------------------------------------

def pagerank(graph: CsrGraph, iterations: int = 20, damping: float = 0.85) -> np.ndarray:
    """Pull-style PageRank; dangling vertices simply leak their rank."""
    g = graph if graph.direction is Direction.IN else graph.transpose()
    v_count = g.num_vertices
    if v_count == 0:
        return np.zeros(0)
    out_deg = np.bincount(g.edges, minlength=v_count)
    rank = np.full(v_count, 1.0 / v_count)
    owners = g.owners()
    for _ in range(iterations):
        contrib = np.divide(rank, out_deg, out=np.zeros(v_count), where=out_deg > 0)
        rank = (1.0 - damping) / v_count + damping * np.bincount(owners, weights=contrib[g.edges], minlength=v_count)
    return rank
