"""
PIN-X: reserve X% of every set's ways for High-Reuse blocks, which stay
pinned for the rest of the run. The remaining ways are managed by a base policy.
"""
from __future__ import annotations

import logging
from typing import Optional

from ._data import PIN_PERCENTAGES
from ._errors import InvalidSpecError
from .engine import ReplacementPolicy
from .grasp import HintSource, RegionMap
from .trace import ReuseHint

logger = logging.getLogger(__name__)


def pin_budget(ways: int, x_percent: int) -> int:
    """Ways reserved per set: ways * x / 100 rounded half up."""
    return (ways * x_percent + 50) // 100


class PinPolicy(ReplacementPolicy):
    can_bypass = True

    def __init__(self, x_percent: int, base: ReplacementPolicy, region_map: Optional[RegionMap] = None) -> None:
        if x_percent not in PIN_PERCENTAGES:
            raise InvalidSpecError(f"PIN-X supports X in {PIN_PERCENTAGES}, got {x_percent}")
        self.x_percent = x_percent
        self.base = base
        self.hints = HintSource(region_map)
        self.name = f"pin{x_percent}"

    def attach(self, cache, rng) -> None:
        super().attach(cache, rng)
        self.base.attach(cache, rng)
        self.budget = pin_budget(self.geometry.ways, self.x_percent)
        self.pinned = [0] * self.geometry.num_sets
        logger.debug("%s: %d of %d ways pinnable per set, base %s",
                     self.name, self.budget, self.geometry.ways, self.base.name)

    def init_set(self, cset) -> None:
        self.base.init_set(cset)

    def decide_insert(self, cset, access) -> bool:
        insert = self.base.decide_insert(cset, access)
        if cset.full and self.pinned[cset.index] == len(cset.slots):
            return False
        return insert

    def choose_victim(self, cset, access) -> int:
        way = self.base.choose_victim(cset, access)
        assert not cset.slots[way].pinned, f"{self.base.name} picked pinned way {way}"
        return way

    def predicted_dead(self, cset, way) -> bool:
        return self.base.predicted_dead(cset, way)

    def on_evict(self, cset, way) -> None:
        self.base.on_evict(cset, way)

    def on_insert(self, cset, way, access) -> None:
        self.base.on_insert(cset, way, access)
        if self.pinned[cset.index] < self.budget and self.hints.hint_of(access) == ReuseHint.HIGH:
            cset.slots[way].pinned = True
            self.pinned[cset.index] += 1

    def on_hit(self, cset, way, access) -> None:
        self.base.on_hit(cset, way, access)

    def on_interval(self, counters) -> None:
        self.base.on_interval(counters)


def pin_policy(x_percent: int, base: ReplacementPolicy, region_map: Optional[RegionMap] = None) -> PinPolicy:
    return PinPolicy(x_percent, base, region_map)
