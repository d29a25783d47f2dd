"""Tests for the cache model, the simulation loop, dead-prediction accounting and SimReport."""
import numpy as np
import pytest

from llc_lab import (
    CacheGeometry,
    InvalidSpecError,
    LruPolicy,
    MemoryAccess,
    RandomPolicy,
    ReplacementPolicy,
    Trace,
    filter_trace,
    simulate,
)
from llc_lab._random import RunRandom
from llc_lab.analysis import StackDistanceTracker
from llc_lab.engine import (
    BYPASSED,
    HIT,
    INSERTED,
    Cache,
    DeadPredictionLedger,
    is_dead_prediction_correct,
)
from llc_lab.report import format_frame, reports_to_frame


def letters_trace(text, geometry):
    """One block per letter, all mapping to set 0; each letter gets its own PC."""
    names = text.split()
    ids = {name: i for i, name in enumerate(dict.fromkeys(names))}
    stride = geometry.num_sets * geometry.block_bytes
    return Trace.from_accesses(MemoryAccess(ids[n] * stride, pc_signature=ids[n] + 1) for n in names), names


def random_trace(seed, length, num_blocks, block_bytes=64):
    rng = np.random.default_rng(seed)
    blocks = rng.integers(0, num_blocks, size=length)
    return Trace.from_arrays(blocks.astype(np.uint64) * np.uint64(block_bytes), pc=rng.integers(0, 16, size=length))


def reference_lru_hits(trace, geometry):
    """Independent LRU: unbounded per-set recency lists, hit iff stack distance <= ways."""
    stacks = {}
    hits = []
    for address in trace.addresses.tolist():
        block = address // geometry.block_bytes
        stack = stacks.setdefault(block % geometry.num_sets, [])
        if block in stack:
            distance = stack.index(block) + 1
            stack.remove(block)
        else:
            distance = None
        stack.insert(0, block)
        hits.append(distance is not None and distance <= geometry.ways)
    return hits


class CountingPolicy(LruPolicy):
    name = "counting"

    def __init__(self):
        self.intervals = []

    def on_interval(self, counters):
        self.intervals.append((counters.accesses, counters.total_instructions))


class TestCache:
    def setup_method(self):
        self.geometry = CacheGeometry(1, 2)
        self.cache = Cache(self.geometry, LruPolicy(), RunRandom(0))

    def test_miss_then_hit(self):
        assert self.cache.access(MemoryAccess(0)) == INSERTED
        assert self.cache.access(MemoryAccess(8)) == HIT
        assert self.cache.contains(0)

    def test_lru_eviction(self):
        for address in (0, 64, 0, 128):
            self.cache.access(MemoryAccess(address))
        assert self.cache.evicted_tag == 1
        assert self.cache.contains(0)
        assert not self.cache.contains(64)

    def test_clock_counts_accesses(self):
        for address in (0, 64, 0):
            self.cache.access(MemoryAccess(address))
        assert self.cache.clock == 3

    def test_bypass(self):
        class NeverInsert(ReplacementPolicy):
            name = "never"
            can_bypass = True

            def decide_insert(self, cset, access):
                return False

        cache = Cache(self.geometry, NeverInsert(), RunRandom(0))
        assert cache.access(MemoryAccess(0)) == BYPASSED
        assert not cache.contains(0)


class TestStackDistanceWalkthrough:
    """X's reuse in one 8-way set: four hits at distances 2, 3, 3, 2, then a miss."""

    TEXT = "X A X A B X A A A B B B A X F X A B C P Q R S T X"

    def test_lru_hits_and_distances(self):
        geometry = CacheGeometry(1, 8)
        trace, names = letters_trace(self.TEXT, geometry)
        cache = Cache(geometry, LruPolicy(), RunRandom(0))
        tracker = StackDistanceTracker(geometry)
        x_codes, x_distances = [], []
        for name, access in zip(names, trace):
            distance = tracker.observe(access.address)
            code = cache.access(access)
            if name == "X":
                x_codes.append(code)
                x_distances.append(distance)
        assert x_codes == [INSERTED, HIT, HIT, HIT, HIT, INSERTED]
        assert x_distances[1:5] == [2, 3, 3, 2]
        assert x_distances[5] > geometry.ways


class TestLruStackEquivalence:
    @pytest.mark.parametrize("seed", range(20))
    def test_hit_iff_distance_within_ways(self, seed):
        rng = np.random.default_rng(1000 + seed)
        geometry = CacheGeometry(int(rng.choice([1, 2, 4, 8])), int(rng.integers(1, 9)))
        trace = random_trace(seed, int(rng.integers(1, 3000)), int(rng.integers(2, 64)))
        cache = Cache(geometry, LruPolicy(), RunRandom(seed))
        hits = [cache.access(a) == HIT for a in trace]
        assert hits == reference_lru_hits(trace, geometry)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20, 200))
    def test_hit_iff_distance_within_ways_many(self, seed):
        self.test_hit_iff_distance_within_ways(seed)


class TestSimulate:
    def test_counter_identities(self):
        report = simulate(random_trace(1, 2000, 40), CacheGeometry(4, 4), LruPolicy())
        assert report.accesses == report.hits + report.misses
        assert report.misses == report.insertions + report.bypasses
        assert report.accesses == 2000

    def test_evictions(self):
        report = simulate(random_trace(2, 500, 30), CacheGeometry(2, 2), LruPolicy())
        assert report.evictions == report.insertions - 4

    def test_deterministic_given_seed(self):
        trace = random_trace(3, 3000, 50)
        a = simulate(trace, CacheGeometry(4, 4), RandomPolicy(), seed=7)
        b = simulate(trace, CacheGeometry(4, 4), RandomPolicy(), seed=7)
        assert (a.hits, a.evictions) == (b.hits, b.evictions)

    def test_empty_trace(self):
        report = simulate(Trace.empty(), CacheGeometry(1, 4), LruPolicy())
        assert report.accesses == 0
        assert report.hit_rate == 0.0
        assert report.mpki is None

    def test_interval_callbacks(self):
        trace = Trace.from_arrays(np.arange(25, dtype=np.uint64) * 64, inst_delta=2)
        policy = CountingPolicy()
        simulate(trace, CacheGeometry(1, 4), policy, interval=10)
        assert policy.intervals == [(10, 20), (20, 40)]

    def test_no_dead_predictions_for_lru(self):
        report = simulate(random_trace(4, 1000, 40), CacheGeometry(2, 4), LruPolicy())
        assert report.dead_predicted_evictions == 0
        assert report.coverage == 0.0
        assert report.accuracy == 0.0

    def test_mpki_uses_instructions(self):
        trace = Trace.from_arrays(np.arange(10, dtype=np.uint64) * 64, inst_delta=100)
        report = simulate(trace, CacheGeometry(1, 4), LruPolicy())
        assert report.mpki == pytest.approx(10.0)
        assert report.miss_per_kilo_access == pytest.approx(1000.0)

    def test_reuse_histogram_collected(self):
        trace = random_trace(5, 500, 20)
        report = simulate(trace, CacheGeometry(2, 4), LruPolicy(), reuse_cap=8)
        assert report.reuse_histogram.total == 500


class TestFilterTrace:
    def test_drops_filter_hits(self):
        trace = Trace.from_arrays(np.array([0, 64, 0, 64, 128, 0], dtype=np.uint64))
        kept = filter_trace(trace, CacheGeometry(1, 2))
        assert kept.addresses.tolist() == [0, 64, 128, 0]


class TestDeadPredictionAccounting:
    def test_never_referenced_again(self):
        assert is_dead_prediction_correct([9, 8, 7], tag=1, ways=8)

    def test_referenced_too_soon(self):
        assert not is_dead_prediction_correct([9, 1], tag=1, ways=4)

    def test_incoming_block_counts(self):
        # the incoming block and one more distinct block reach ways=2 before the victim returns
        assert is_dead_prediction_correct([9, 8, 1], tag=1, ways=2)

    def test_repeats_do_not_count(self):
        assert not is_dead_prediction_correct([9, 9, 9, 1], tag=1, ways=2)

    def test_ledger_matches_offline_judgement(self):
        ledger = DeadPredictionLedger(ways=2)
        ledger.flag(0, victim_tag=1, incoming_tag=9)
        ledger.flag(0, victim_tag=2, incoming_tag=9)
        ledger.observe(0, 1)
        ledger.finish()
        assert (ledger.correct, ledger.wrong) == (1, 1)

    def test_ledger_pending_until_finish(self):
        ledger = DeadPredictionLedger(ways=4)
        ledger.flag(3, victim_tag=5, incoming_tag=6)
        assert ledger.has_pending(3)
        ledger.finish()
        assert ledger.correct == 1
        assert not ledger.has_pending(3)


class TestReport:
    def setup_method(self):
        self.report = simulate(random_trace(6, 300, 20), CacheGeometry(2, 2), LruPolicy())

    def test_csv_columns(self):
        text = format_frame(reports_to_frame([self.report]), "csv")
        header = text.splitlines()[0]
        assert header.startswith("trace,geometry,policy,accesses,hits,misses,bypasses")
        assert len(text.splitlines()) == 2

    def test_csv_is_stable(self):
        frame = reports_to_frame([self.report])
        assert format_frame(frame) == format_frame(frame)

    def test_json(self):
        text = format_frame(reports_to_frame([self.report]), "json")
        assert '"policy": "lru"' in text

    def test_unknown_format(self):
        with pytest.raises(InvalidSpecError, match="output format"):
            format_frame(reports_to_frame([self.report]), "xml")
