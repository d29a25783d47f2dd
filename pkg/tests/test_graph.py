"""Tests for CSR graphs, graph files, skew metrics, generators and graph traces."""
import numpy as np
import pytest

from llc_lab import (
    BadMagicError,
    CsrGraph,
    Direction,
    FormatError,
    GraphFormatError,
    InfeasibleDegreeSequence,
    InvalidSpecError,
    ReuseHint,
    TruncatedDataError,
    gen_graph_trace,
    load_edge_list,
    read_csr,
    skew_metrics,
    write_csr,
)
from llc_lab._data import GRAPH_PCS, GRAPH_PROP_BASE
from llc_lab.graph import DegreeKind, degrees, graph_layout, pagerank, synth_powerlaw, synth_uniform

B = GRAPH_PROP_BASE


def triangle(direction="in"):
    # 0 -> 1, 2 -> 1, 0 -> 2
    return CsrGraph.from_edges([0, 2, 0], [1, 1, 2], 3, direction)


def two_cycle(direction="in"):
    return CsrGraph.from_edges([1, 0], [0, 1], 2, direction)


class TestCsrGraph:
    def test_in_layout(self):
        g = triangle()
        assert g.offsets.tolist() == [0, 0, 2, 3]
        assert g.edges.tolist() == [0, 2, 0]
        assert g.neighbors(1).tolist() == [0, 2]

    def test_out_layout(self):
        g = triangle("out")
        assert g.offsets.tolist() == [0, 2, 2, 3]
        assert g.edges.tolist() == [1, 2, 1]

    def test_transpose(self):
        assert triangle().transpose() == triangle("out")
        assert triangle("out").transpose() == triangle()

    def test_unsorted_adjacency_keeps_input_order(self):
        g = CsrGraph.from_edges([2, 0], [1, 1], 3, sort_adjacency=False)
        assert g.neighbors(1).tolist() == [2, 0]
        assert g.canonical().neighbors(1).tolist() == [0, 2]

    def test_degrees(self):
        g = triangle()
        assert degrees(g, DegreeKind.IN).tolist() == [0, 2, 1]
        assert degrees(g, DegreeKind.OUT).tolist() == [2, 0, 1]
        assert degrees(g, "sum").tolist() == [2, 2, 2]
        assert degrees(triangle("out"), "out").tolist() == [2, 0, 1]

    def test_arrays_are_read_only(self):
        with pytest.raises(ValueError):
            triangle().edges[0] = 1

    @pytest.mark.parametrize("offsets, edges, message", [
        ([1, 2], [0, 0], "run from 0"),
        ([0, 2, 1, 2], [0, 0], "non-decreasing"),
        ([0, 1, 2], [0, 5], "must lie in"),
    ])
    def test_validation(self, offsets, edges, message):
        with pytest.raises(InvalidSpecError, match=message):
            CsrGraph(offsets, edges)

    def test_from_edges_range(self):
        with pytest.raises(InvalidSpecError, match="must lie in"):
            CsrGraph.from_edges([0], [3], 3)


class TestEdgeList:
    def write(self, tmp_path, text):
        path = tmp_path / "g.el"
        path.write_text(text)
        return path

    def test_load(self, tmp_path):
        path = self.write(tmp_path, "# triangle\n0 1\n2 1  # trailing\n\n0 2\n")
        assert load_edge_list(path) == triangle()
        assert load_edge_list(path, "out") == triangle("out")

    def test_num_vertices(self, tmp_path):
        path = self.write(tmp_path, "0 1\n")
        assert load_edge_list(path, num_vertices=5).num_vertices == 5
        with pytest.raises(GraphFormatError, match="does not fit"):
            load_edge_list(path, num_vertices=1)

    def test_compact(self, tmp_path):
        path = self.write(tmp_path, "10 20\n30 20\n10 30\n")
        assert load_edge_list(path, compact=True) == triangle()

    @pytest.mark.parametrize("text, message", [
        ("0 1 2\n", "expected 'src dst'"),
        ("a b\n", "non-integer"),
        ("-1 2\n", "must lie in"),
    ])
    def test_errors(self, tmp_path, text, message):
        with pytest.raises(GraphFormatError, match=message):
            load_edge_list(self.write(tmp_path, text))


class TestCsrFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "g.csr"
        g = synth_uniform(50, 3, seed=4)
        write_csr(g, path)
        assert path.stat().st_size == 20 + 8 * (51 + 150)
        assert read_csr(path) == g
        assert read_csr(path, "out").direction is Direction.OUT

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "g.csr"
        path.write_bytes(b"XXXX" + bytes(16))
        with pytest.raises(BadMagicError):
            read_csr(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "g.csr"
        write_csr(triangle(), path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(TruncatedDataError, match="declares"):
            read_csr(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "g.csr"
        write_csr(triangle(), path)
        path.write_bytes(path.read_bytes() + bytes(8))
        with pytest.raises(FormatError, match="trailing"):
            read_csr(path)

    def test_inconsistent_arrays(self, tmp_path):
        path = tmp_path / "g.csr"
        write_csr(triangle(), path)
        data = bytearray(path.read_bytes())
        data[-8:] = (9).to_bytes(8, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="inconsistent"):
            read_csr(path)


class TestSkewMetrics:
    def test_values(self):
        # vertices 0 and 8 have out-degree 7, vertex 15 out-degree 1; average 15/16
        src = [0] * 7 + [8] * 7 + [15]
        dst = list(range(1, 8)) * 2 + [0]
        g = CsrGraph.from_edges(src, dst, 16, "out")
        m = skew_metrics(g)
        assert m.hot_fraction == 3 / 16
        assert m.hot_edge_coverage == 1.0
        assert m.avg_hot_per_block == 1.5
        assert m.hot_footprint_bytes == 128

    def test_uniform_degrees_are_all_hot(self):
        g = synth_uniform(64, 4, seed=1)
        m = skew_metrics(g, prop_bytes=16, degree_kind="in")
        assert m.hot_fraction == 1.0
        assert m.avg_hot_per_block == 4.0

    def test_prop_bytes_must_divide_block(self):
        with pytest.raises(InvalidSpecError, match="must divide"):
            skew_metrics(triangle(), prop_bytes=24)


class TestSynthPowerlaw:
    def setup_method(self):
        self.g = synth_powerlaw(5000, 8, 2.0, seed=3)

    def test_deterministic(self):
        assert synth_powerlaw(5000, 8, 2.0, seed=3) == self.g
        assert synth_powerlaw(5000, 8, 2.0, seed=4) != self.g

    def test_symmetric_without_self_loops(self):
        g = self.g
        assert g.direction is Direction.IN
        t = g.transpose()
        assert np.array_equal(t.offsets, g.offsets)
        assert np.array_equal(t.edges, g.edges)
        assert not np.any(g.owners() == g.edges)

    def test_average_and_skew(self):
        g = self.g
        assert 0.85 * 8 <= g.avg_degree <= 1.05 * 8
        assert g.row_degrees().max() <= np.sqrt(5000 * 8)
        assert skew_metrics(g).hot_fraction < 0.5
        assert skew_metrics(g).hot_edge_coverage > 0.5

    def test_infeasible(self):
        with pytest.raises(InfeasibleDegreeSequence, match="below the requested average"):
            synth_powerlaw(100, 8, 2.0, max_degree=2)

    def test_odd_stubs_with_every_vertex_at_the_cap(self):
        # three vertices capped at degree 1: whenever all three draw 1 the stub count is odd
        raised = 0
        for seed in range(64):
            try:
                g = synth_powerlaw(3, 1, 2.0, seed=seed, max_degree=1)
            except InvalidSpecError as exc:
                assert "max degree 1" in str(exc)
                raised += 1
            else:
                assert g.row_degrees().max() <= 1
        assert raised > 0

    @pytest.mark.parametrize("args", [(1, 8, 2.0), (100, 0.5, 2.0), (100, 8, 1.0)])
    def test_invalid(self, args):
        with pytest.raises(InvalidSpecError):
            synth_powerlaw(*args)


class TestSynthUniform:
    def test_every_vertex_has_degree(self):
        g = synth_uniform(200, 5, seed=9)
        assert np.all(g.row_degrees() == 5)
        assert not np.any(g.owners() == g.edges)
        assert synth_uniform(200, 5, seed=9) == g

    def test_invalid(self):
        with pytest.raises(InvalidSpecError, match="degree"):
            synth_uniform(10, -1)


class TestGraphTrace:
    def test_layout(self):
        layout = graph_layout(two_cycle())
        assert layout == (B, B + 64, B + 128, B + 192, B + 200)
        assert graph_layout(two_cycle(), dst_array=False).dst_prop == B

    def test_pull(self):
        trace, abrs = gen_graph_trace(two_cycle())
        assert trace.addresses.tolist() == [B + 128, B + 192, B + 8, B + 64, B + 136, B, B + 72]
        assert [a.is_write for a in trace] == [False, False, False, True, False, False, True]
        assert trace.pcs.tolist() == [
            GRAPH_PCS["vertex"], GRAPH_PCS["edge"], GRAPH_PCS["prop_read"], GRAPH_PCS["prop_write"],
            GRAPH_PCS["vertex"], GRAPH_PCS["prop_read"], GRAPH_PCS["prop_write"],
        ]
        assert abrs == [(B, B + 16)]
        assert not trace.has_hints

    def test_push(self):
        trace, abrs = gen_graph_trace(two_cycle("out"), mode="push")
        assert trace.addresses.tolist() == [B + 128, B + 192, B, B + 72, B + 136, B + 8, B + 64]
        assert abrs == [(B + 64, B + 80)]

    def test_direction_must_match_mode(self):
        with pytest.raises(InvalidSpecError, match="in-edge CSR"):
            gen_graph_trace(two_cycle("out"))
        with pytest.raises(InvalidSpecError, match="pull or push"):
            gen_graph_trace(two_cycle(), mode="scatter")

    def test_iterations(self):
        once, _ = gen_graph_trace(two_cycle())
        twice, _ = gen_graph_trace(two_cycle(), iterations=2)
        assert twice.addresses.tolist() == once.addresses.tolist() * 2

    def test_hints(self):
        trace, _ = gen_graph_trace(two_cycle(), hint_capacity=64)
        hints = [a.reuse_hint for a in trace]
        assert all(a.hint_valid for a in trace)
        assert hints[2] == hints[5] == ReuseHint.HIGH
        assert hints[0] == hints[3] == ReuseHint.LOW

    def test_edge_blocks_emitted_once(self):
        g = synth_uniform(64, 8, seed=0)
        trace, _ = gen_graph_trace(g)
        layout = graph_layout(g)
        edge_refs = trace.addresses[trace.pcs == GRAPH_PCS["edge"]]
        assert edge_refs.size == -(-g.num_edges * 4 // 64)
        assert np.all(np.diff(edge_refs.astype(np.int64)) == 64)
        assert int(edge_refs[0]) == layout.edge
        assert len(trace) == 2 * 64 + g.num_edges + edge_refs.size


class TestPagerank:
    def test_cycle_is_uniform(self):
        g = CsrGraph.from_edges([0, 1, 2, 3], [1, 2, 3, 0], 4)
        assert np.allclose(pagerank(g), 0.25)

    def test_direction_independent(self):
        g = synth_uniform(100, 4, seed=5)
        assert np.allclose(pagerank(g), pagerank(g.transpose()))
