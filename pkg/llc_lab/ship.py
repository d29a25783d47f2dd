"""
SHiP-MEM: RRIP whose insertion depth is predicted per memory region.

Sampler sets train a table of 3-bit saturating counters indexed by the 16KB
region of the block's address; every set consults the table on insertion.
"""
from __future__ import annotations

import logging

from ._data import SHIP_COUNTER_INIT, SHIP_COUNTER_MAX, SHIP_REGION_BYTES, SHIP_SAMPLER_SETS
from ._errors import InvalidSpecError
from .baseline import SrripPolicy

logger = logging.getLogger(__name__)


def strided_sets(num_sets: int, count: int) -> list[int]:
    """`count` set indices spread evenly over the cache (all sets if count >= num_sets)."""
    count = min(count, num_sets)
    stride = num_sets // count
    return [i * stride for i in range(count)]


class RegionCounters:
    """Unbounded region -> saturating counter map; unseen regions read as the initial value."""

    __slots__ = ("_counters", "maximum", "initial")

    def __init__(self, maximum: int = SHIP_COUNTER_MAX, initial: int = SHIP_COUNTER_INIT) -> None:
        self._counters: dict[int, int] = {}
        self.maximum = maximum
        self.initial = initial

    def __getitem__(self, region: int) -> int:
        return self._counters.get(region, self.initial)

    def increment(self, region: int) -> None:
        value = self[region]
        if value < self.maximum:
            self._counters[region] = value + 1

    def decrement(self, region: int) -> None:
        value = self[region]
        if value > 0:
            self._counters[region] = value - 1

    def __len__(self) -> int:
        return len(self._counters)


class ShipMemPolicy(SrripPolicy):
    def __init__(
        self,
        bits: int = 3,
        region_bytes: int = SHIP_REGION_BYTES,
        sampler_sets: int = SHIP_SAMPLER_SETS,
    ) -> None:
        super().__init__(bits)
        if region_bytes < 1 or region_bytes & (region_bytes - 1):
            raise InvalidSpecError(f"region size must be a power of two, got {region_bytes}")
        if sampler_sets < 1:
            raise InvalidSpecError(f"SHiP needs at least one sampler set, got {sampler_sets}")
        self.region_shift = region_bytes.bit_length() - 1
        self.sampler_count = sampler_sets
        self.counters = RegionCounters()
        self.name = "ship-mem"

    def attach(self, cache, rng) -> None:
        super().attach(cache, rng)
        self.sampler_sets = frozenset(strided_sets(self.geometry.num_sets, self.sampler_count))
        logger.debug("ship-mem: %d sampler sets, %d-byte regions", len(self.sampler_sets), 1 << self.region_shift)

    def insertion_rrpv(self, cset, access) -> int:
        if self.counters[access.address >> self.region_shift] == 0:
            return self.max_rrpv
        return self.max_rrpv - 1

    def on_evict(self, cset, way) -> None:
        slot = cset.slots[way]
        if cset.index in self.sampler_sets and not slot.outcome:
            self.counters.decrement(slot.region)

    def on_insert(self, cset, way, access) -> None:
        slot = cset.slots[way]
        slot.rrpv = self.insertion_rrpv(cset, access)
        slot.region = access.address >> self.region_shift
        slot.outcome = False

    def on_hit(self, cset, way, access) -> None:
        slot = cset.slots[way]
        slot.rrpv = 0
        if cset.index in self.sampler_sets:
            slot.outcome = True
            self.counters.increment(slot.region)


def ship_mem_policy(m: int = 3, **options) -> ShipMemPolicy:
    return ShipMemPolicy(m, **options)
