"""Tests for the LRU insertion family, NRU, the RRIP family, Random and set dueling."""
import pytest

from llc_lab import (
    BipPolicy,
    BrripPolicy,
    CacheGeometry,
    DipPolicy,
    DrripPolicy,
    InvalidSpecError,
    LipPolicy,
    LruPolicy,
    MemoryAccess,
    NruPolicy,
    PatternKind,
    PatternSpec,
    RandomPolicy,
    SrripPolicy,
    generate_pattern,
    simulate,
)
from llc_lab._random import RunRandom
from llc_lab.baseline import nru_victim, rrpv_victim
from llc_lab.dueling import A, B, SetDuel, ShadowDuel, make_duel
from llc_lab.engine import BlockSlot, Cache


def slots_with(rrpvs, pinned=()):
    slots = []
    for way, rrpv in enumerate(rrpvs):
        slot = BlockSlot()
        slot.valid = True
        slot.rrpv = rrpv
        slot.pinned = way in pinned
        slots.append(slot)
    return slots


def thrash(ways, n=64):
    return generate_pattern(PatternSpec(PatternKind.THRASHING, 2 * ways, n))


class TestVictimScans:
    def test_rrpv_picks_lowest_index_at_max(self):
        assert rrpv_victim(slots_with([3, 1, 3]), 3) == 0

    def test_rrpv_ages_by_deficit(self):
        slots = slots_with([1, 2, 0])
        assert rrpv_victim(slots, 3) == 1
        assert [s.rrpv for s in slots] == [2, 3, 1]

    def test_rrpv_skips_pinned(self):
        assert rrpv_victim(slots_with([3, 3, 0], pinned={0}), 3) == 1

    def test_rrpv_all_pinned(self):
        with pytest.raises(LookupError):
            rrpv_victim(slots_with([3, 3], pinned={0, 1}), 3)

    def test_nru_single_candidate(self):
        assert nru_victim(slots_with([0, 1, 0]), 1, RunRandom(0)) == 1

    def test_nru_random_among_oldest(self):
        picks = {nru_victim(slots_with([1, 1, 1, 0]), 1, RunRandom(seed)) for seed in range(40)}
        assert picks == {0, 1, 2}


class TestLruFamily:
    def test_recency_friendly_fits(self):
        trace = generate_pattern(PatternSpec(PatternKind.RECENCY_FRIENDLY, 8, 4))
        report = simulate(trace, CacheGeometry(1, 8), LruPolicy())
        assert report.misses == 8

    def test_lip_inserts_at_lru(self):
        cache = Cache(CacheGeometry(1, 4), LipPolicy(), RunRandom(0))
        for address in (0, 64, 128):
            cache.access(MemoryAccess(address))
        assert cache.sets[0].state.order == [0, 1, 2]

    def test_bip_always_mru_at_epsilon_one(self):
        cache = Cache(CacheGeometry(1, 4), BipPolicy(1.0), RunRandom(0))
        for address in (0, 64, 128):
            cache.access(MemoryAccess(address))
        assert cache.sets[0].state.order == [2, 1, 0]

    @pytest.mark.parametrize("epsilon", [0.0, -0.1, 1.5])
    def test_epsilon_range(self, epsilon):
        with pytest.raises(InvalidSpecError, match="epsilon"):
            BipPolicy(epsilon)


class TestThrashing:
    """Cyclic working set of twice the associativity on a single set."""

    WAYS = 16

    def setup_method(self):
        self.trace = thrash(self.WAYS)
        self.geometry = CacheGeometry(1, self.WAYS)

    def test_lru_never_hits(self):
        assert simulate(self.trace, self.geometry, LruPolicy()).hits == 0

    def test_dip_adapts(self):
        assert simulate(self.trace, self.geometry, DipPolicy()).hit_rate >= 0.25

    def test_lip_keeps_a_fraction(self):
        assert simulate(self.trace, self.geometry, LipPolicy()).hits > 0

    @pytest.mark.parametrize("bits", [2, 3])
    def test_srrip_degenerates_to_fifo(self, bits):
        assert simulate(self.trace, self.geometry, SrripPolicy(bits)).hits == 0

    @pytest.mark.parametrize("bits", [2, 3])
    def test_brrip_hits(self, bits):
        assert simulate(self.trace, self.geometry, BrripPolicy(bits)).hits > 0

    @pytest.mark.parametrize("bits", [2, 3])
    def test_drrip_hits(self, bits):
        assert simulate(self.trace, self.geometry, DrripPolicy(bits)).hits > 0


class TestNru:
    def test_names(self):
        assert [NruPolicy(b).name for b in range(1, 5)] == ["nru1", "nru2", "nru3", "nru4"]

    def test_width_range(self):
        with pytest.raises(InvalidSpecError, match="1..4"):
            NruPolicy(5)

    def test_hit_resets_class(self):
        cache = Cache(CacheGeometry(1, 2), NruPolicy(2), RunRandom(0))
        cache.access(MemoryAccess(0))
        cache.sets[0].slots[0].rrpv = 3
        cache.access(MemoryAccess(0))
        assert cache.sets[0].slots[0].rrpv == 0


class TestRrip:
    def test_srrip_insertion_value(self):
        cache = Cache(CacheGeometry(1, 4), SrripPolicy(3), RunRandom(0))
        cache.access(MemoryAccess(0))
        assert cache.sets[0].slots[0].rrpv == 6

    def test_brrip_insertion_at_max(self):
        cache = Cache(CacheGeometry(1, 4), BrripPolicy(2, epsilon=1e-9), RunRandom(0))
        cache.access(MemoryAccess(0))
        assert cache.sets[0].slots[0].rrpv == 3

    def test_width_range(self):
        with pytest.raises(InvalidSpecError, match="2 or 3"):
            SrripPolicy(4)

    def test_names(self):
        assert SrripPolicy(2).name == "srrip2"
        assert BrripPolicy(3).name == "brrip3"
        assert DrripPolicy(3).name == "drrip3"


class TestRandom:
    def test_same_seed_same_run(self):
        trace = thrash(4, 20)
        a = simulate(trace, CacheGeometry(1, 4), RandomPolicy(), seed=11)
        b = simulate(trace, CacheGeometry(1, 4), RandomPolicy(), seed=11)
        assert a.hits == b.hits


class TestSetDueling:
    def test_leader_layout(self):
        duel = SetDuel(128, leaders=32)
        assert duel.leader_sets_a[:3] == [0, 4, 8]
        assert duel.leader_sets_b[:3] == [2, 6, 10]
        assert duel.choice(0) == A
        assert duel.choice(2) == B

    def test_followers_track_psel(self):
        duel = SetDuel(128, leaders=32, psel_bits=10)
        assert duel.choice(1) == A
        duel.record_miss(0)
        assert duel.choice(1) == B
        duel.record_miss(2)
        duel.record_miss(2)
        assert duel.choice(1) == A

    def test_psel_saturates(self):
        duel = SetDuel(128, leaders=32, psel_bits=2)
        for _ in range(10):
            duel.record_miss(0)
        assert duel.psel.value == 3

    def test_too_few_sets(self):
        with pytest.raises(InvalidSpecError, match="leader sets"):
            SetDuel(32, leaders=32)

    def test_small_caches_use_shadow_directories(self):
        duel = make_duel(CacheGeometry(4, 4), LruPolicy, BipPolicy, RunRandom(0))
        assert isinstance(duel, ShadowDuel)
        assert not duel.is_leader(0)

    def test_large_caches_use_leader_sets(self):
        policy = DrripPolicy(2)
        Cache(CacheGeometry(128, 4), policy, RunRandom(0))
        assert isinstance(policy.duel, SetDuel)
        assert policy.duel.is_leader(0)
