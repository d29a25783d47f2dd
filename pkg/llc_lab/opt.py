"""
Belady's OPT: evict the resident block whose next reference is farthest in
the future. Two passes over the trace, next-use indexing then simulation.
"""
from __future__ import annotations

import logging

import numpy as np

from .engine import ReplacementPolicy, simulate
from .geometry import CacheGeometry
from .report import SimReport
from .trace import Trace

logger = logging.getLogger(__name__)


def next_use_indices(trace: Trace, block_bytes: int) -> np.ndarray:
    """
    For every record, the index of the next record touching the same block,
    or len(trace) when the block is never touched again.
    """
    n = len(trace)
    blocks = trace.addresses // np.uint64(block_bytes)
    order = np.argsort(blocks, kind="stable")
    sorted_blocks = blocks[order]
    next_use = np.full(n, n, dtype=np.int64)
    same = sorted_blocks[1:] == sorted_blocks[:-1]
    next_use[order[:-1][same]] = order[1:][same]
    return next_use


class BeladyPolicy(ReplacementPolicy):
    """
    Offline optimal replacement over a known trace. With allow_bypass the
    incoming block is not inserted when its next use is strictly farther than
    that of every resident block.
    """

    def __init__(self, trace: Trace, allow_bypass: bool = False) -> None:
        self.trace = trace
        self.allow_bypass = allow_bypass
        self.can_bypass = allow_bypass
        self.name = "opt-bypass" if allow_bypass else "opt"

    def attach(self, cache, rng) -> None:
        super().attach(cache, rng)
        self.next_use = next_use_indices(self.trace, self.geometry.block_bytes).tolist()

    def decide_insert(self, cset, access) -> bool:
        if not self.allow_bypass or not cset.full:
            return True
        incoming = self.next_use[self.cache.clock]
        return incoming <= max(slot.next_use for slot in cset.slots)

    def choose_victim(self, cset, access) -> int:
        slots = cset.slots
        victim = 0
        for way in range(1, len(slots)):
            if slots[way].next_use > slots[victim].next_use:
                victim = way
        return victim

    def on_insert(self, cset, way, access) -> None:
        cset.slots[way].next_use = self.next_use[self.cache.clock]

    def on_hit(self, cset, way, access) -> None:
        cset.slots[way].next_use = self.next_use[self.cache.clock]


def opt_oracle(trace: Trace, geometry: CacheGeometry, allow_bypass: bool = False) -> SimReport:
    """Minimum-miss run of `trace` on `geometry`."""
    report = simulate(trace, geometry, BeladyPolicy(trace, allow_bypass))
    logger.info("OPT%s: %d misses", " with bypass" if allow_bypass else "", report.misses)
    return report
