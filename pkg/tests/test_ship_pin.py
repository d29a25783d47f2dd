"""Tests for SHiP-MEM and PIN-X."""
import numpy as np
import pytest

from llc_lab import (
    AddressBoundRegister,
    CacheGeometry,
    ConfigurationError,
    InvalidSpecError,
    LruPolicy,
    MemoryAccess,
    PinPolicy,
    PolicyOptions,
    RegionMap,
    ShipMemPolicy,
    Trace,
    make_policy,
    simulate,
)
from llc_lab._random import RunRandom
from llc_lab.engine import Cache
from llc_lab.leeway import LeewayMode, leeway_policy
from llc_lab.pin import pin_budget, pin_policy
from llc_lab.ship import RegionCounters, ship_mem_policy, strided_sets


def addresses(*values):
    return Trace.from_arrays(np.array(values, dtype=np.uint64))


class TestStridedSets:
    def test_spread(self):
        assert strided_sets(128, 64) == list(range(0, 128, 2))

    def test_small_cache_uses_every_set(self):
        assert strided_sets(4, 64) == [0, 1, 2, 3]


class TestRegionCounters:
    def test_unseen_regions_start_at_one(self):
        assert RegionCounters()[12345] == 1

    def test_saturation(self):
        c = RegionCounters()
        for _ in range(10):
            c.increment(3)
        assert c[3] == 7
        for _ in range(10):
            c.decrement(3)
        assert c[3] == 0


class TestShipMem:
    def setup_method(self):
        self.policy = ShipMemPolicy()
        self.cache = Cache(CacheGeometry(1, 4), self.policy, RunRandom(0))

    def test_streaming_region_learns_distant_insertion(self):
        for block in range(40):
            self.cache.access(MemoryAccess(block * 64))
        assert self.policy.counters[0] == 0
        way = self.cache.sets[0].lookup[39]
        assert self.cache.sets[0].slots[way].rrpv == 7

    def test_reused_region_counts_up(self):
        self.cache.access(MemoryAccess(0))
        self.cache.access(MemoryAccess(0))
        assert self.policy.counters[0] == 2

    def test_fresh_region_inserts_at_long(self):
        self.cache.access(MemoryAccess(0))
        assert self.cache.sets[0].slots[0].rrpv == 6

    def test_sampler_sets(self):
        policy = ShipMemPolicy()
        Cache(CacheGeometry(128, 4), policy, RunRandom(0))
        assert policy.sampler_sets == frozenset(range(0, 128, 2))

    def test_region_size(self):
        with pytest.raises(InvalidSpecError, match="power of two"):
            ShipMemPolicy(region_bytes=3000)

    def test_name(self):
        assert ShipMemPolicy().name == "ship-mem"


class TestPinBudget:
    @pytest.mark.parametrize("ways, x, expected", [
        (16, 25, 4), (16, 50, 8), (16, 100, 16), (8, 25, 2), (3, 25, 1), (3, 50, 2),
    ])
    def test_rounding(self, ways, x, expected):
        assert pin_budget(ways, x) == expected


class TestPin:
    def setup_method(self):
        self.geometry = CacheGeometry(1, 4)
        # the 256-byte LLC makes [0, 256) the High-Reuse region
        self.region_map = RegionMap([AddressBoundRegister(0, 4096)], self.geometry.capacity)

    def test_pinned_blocks_survive_streaming(self):
        low = [1024 + 64 * i for i in range(20)]
        trace = addresses(0, 64, *low, 0, 64)
        report = simulate(trace, self.geometry, PinPolicy(50, LruPolicy(), self.region_map))
        assert report.hits == 2

    def test_budget_limits_pinning(self):
        policy = PinPolicy(50, LruPolicy(), self.region_map)
        cache = Cache(self.geometry, policy, RunRandom(0))
        for address in (0, 64, 128, 192):
            cache.access(MemoryAccess(address))
        assert sum(s.pinned for s in cache.sets[0].slots) == 2

    def test_fully_pinned_set_bypasses(self):
        low = [1024 + 64 * i for i in range(10)]
        trace = addresses(0, 64, 128, 192, *low, 0, 64, 128, 192)
        report = simulate(trace, self.geometry, PinPolicy(100, LruPolicy(), self.region_map))
        assert report.bypasses == 10
        assert report.hits == 4

    def test_without_regions_nothing_is_pinned(self):
        trace = addresses(*(64 * i for i in range(12)))
        policy = PinPolicy(100, LruPolicy())
        report = simulate(trace, self.geometry, policy)
        assert report.bypasses == 0
        assert policy.pinned == [0]

    def test_name_and_range(self):
        assert PinPolicy(25, LruPolicy()).name == "pin25"
        with pytest.raises(InvalidSpecError, match="PIN-X"):
            PinPolicy(30, LruPolicy())

    def test_pin_cannot_wrap_pin(self):
        with pytest.raises(ConfigurationError, match="another PIN-X"):
            make_policy("pin50", options=PolicyOptions(pin_base="pin25"))

    def test_default_base_is_drrip(self):
        assert make_policy("pin75").base.name == "drrip3"


class TestFactories:
    def test_ship_mem(self):
        policy = ship_mem_policy(2, sampler_sets=4)
        assert (policy.name, policy.bits, policy.sampler_count) == ("ship-mem", 2, 4)
        built = make_policy("ship-mem", options=PolicyOptions(rrpv_bits=2, ship_sampler_sets=4))
        assert (built.bits, built.sampler_count) == (2, 4)

    def test_pin(self):
        region_map = RegionMap([AddressBoundRegister(0, 4096)], 256)
        policy = pin_policy(50, LruPolicy(), region_map)
        assert (policy.name, policy.x_percent, policy.base.name) == ("pin50", 50, "lru")
        assert policy.hints.region_map is region_map
        built = make_policy("pin50", region_map=region_map, options=PolicyOptions(pin_base="lru"))
        assert (built.x_percent, built.base.name) == (50, "lru")

    def test_leeway(self):
        policy = leeway_policy("static-rop", "nru2", ldpt_entries=64)
        assert (policy.name, policy.nru_bits, policy.ldpt_entries) == ("leeway-static-rop-nru2", 2, 64)
        built = make_policy("leeway-static-rop", options=PolicyOptions(leeway_base="nru2", ldpt_entries=64))
        assert (built.name, built.ldpt_entries) == (policy.name, 64)
        assert make_policy("leeway-nru2").mode is LeewayMode.DYNAMIC
