"""
The set-associative cache model, the policy contract every replacement
technique implements, and the trace-driven simulation loop.
"""
from __future__ import annotations

import logging
from typing import Iterable, Optional

import numpy as np

from ._random import RunRandom
from .analysis import StackDistanceTracker
from .geometry import CacheGeometry
from .report import SimReport
from .trace import MemoryAccess, Trace

logger = logging.getLogger(__name__)

# Cache.access outcomes
HIT = 0
INSERTED = 1
BYPASSED = 2

DEFAULT_INTERVAL = 10_000


class BlockSlot:
    """
    One way of one set. Besides valid/tag the slot carries the per-block fields
    the implemented policies need; a policy only touches the ones it owns.
    """

    __slots__ = (
        "valid", "tag",
        "rrpv",         # RRIP re-reference value, or NRU class
        "predicted",    # Leeway predicted live distance
        "live",         # Leeway live distance (sampler sets)
        "signature",    # PC signature of the filling access
        "pinned",       # PIN-X
        "outcome",      # SHiP: hit since fill
        "region",       # SHiP: memory region id
        "next_use",     # Belady: index of the next reference
    )

    def __init__(self) -> None:
        self.valid = False
        self.tag = -1
        self.rrpv = 0
        self.predicted = 0
        self.live = 0
        self.signature = 0
        self.pinned = False
        self.outcome = False
        self.region = 0
        self.next_use = 0

    def clear(self) -> None:
        self.valid = False
        self.tag = -1
        self.pinned = False
        self.outcome = False

    def __repr__(self) -> str:
        if not self.valid:
            return "BlockSlot(invalid)"
        return f"BlockSlot(tag={self.tag:#x}, rrpv={self.rrpv}, predicted={self.predicted}, live={self.live})"


class CacheSet:
    """The view of one set handed to policies: slots, tag lookup and per-set policy state."""

    __slots__ = ("index", "slots", "lookup", "valid_count", "state")

    def __init__(self, index: int, ways: int) -> None:
        self.index = index
        self.slots = [BlockSlot() for _ in range(ways)]
        self.lookup: dict[int, int] = {}
        self.valid_count = 0
        self.state = None

    @property
    def full(self) -> bool:
        return self.valid_count == len(self.slots)

    def free_way(self) -> int:
        for way, slot in enumerate(self.slots):
            if not slot.valid:
                return way
        raise LookupError(f"set {self.index} is full")

    def valid_ways(self) -> list[int]:
        return [w for w, s in enumerate(self.slots) if s.valid]


# ---------------------------------------------------------------------------
# Policy contract
# ---------------------------------------------------------------------------

class ReplacementPolicy:
    """
    Insertion / eviction / hit-promotion hooks. The engine calls, per access:

      hit   -> on_hit
      miss  -> decide_insert; if it returns True:
                 choose_victim (only when the set is full), predicted_dead,
                 on_evict, then on_insert

    Policies must be deterministic given the RunRandom they are attached with.
    """

    name = "policy"
    can_bypass = False

    cache: Cache
    geometry: CacheGeometry
    rng: RunRandom

    def attach(self, cache: Cache, rng: RunRandom) -> None:
        self.cache = cache
        self.geometry = cache.geometry
        self.rng = rng

    def init_set(self, cset: CacheSet) -> None:
        pass

    def decide_insert(self, cset: CacheSet, access: MemoryAccess) -> bool:
        return True

    def choose_victim(self, cset: CacheSet, access: MemoryAccess) -> int:
        raise NotImplementedError

    def predicted_dead(self, cset: CacheSet, way: int) -> bool:
        """Whether the victim just chosen was flagged dead (dead-block predictors only)."""
        return False

    def on_evict(self, cset: CacheSet, way: int) -> None:
        pass

    def on_insert(self, cset: CacheSet, way: int, access: MemoryAccess) -> None:
        pass

    def on_hit(self, cset: CacheSet, way: int, access: MemoryAccess) -> None:
        pass

    def on_interval(self, counters: SimReport) -> None:
        pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


# ---------------------------------------------------------------------------
# Dead-prediction accounting
# ---------------------------------------------------------------------------

def is_dead_prediction_correct(future_tags: Iterable[int], tag: int, ways: int) -> bool:
    """
    Judge one dead prediction given the tags referenced in the victim's set from
    the evicting access onward (the incoming block first).

    Correct iff the victim is never referenced again, or at least `ways` distinct
    other blocks are referenced in the set before it is (LRU would have missed too).
    """
    seen: set[int] = set()
    for t in future_tags:
        if t == tag:
            return False
        seen.add(t)
        if len(seen) >= ways:
            return True
    return True


class DeadPredictionLedger:
    """
    Resolves dead predictions online: each flagged eviction stays pending until
    its block comes back (wrong) or `ways` distinct blocks have been seen (right).
    Anything still pending at the end was never referenced again.
    """

    __slots__ = ("_ways", "_pending", "correct", "wrong")

    def __init__(self, ways: int) -> None:
        self._ways = ways
        self._pending: dict[int, list[tuple[int, set]]] = {}
        self.correct = 0
        self.wrong = 0

    def has_pending(self, set_index: int) -> bool:
        return set_index in self._pending

    def flag(self, set_index: int, victim_tag: int, incoming_tag: int) -> None:
        seen = {incoming_tag}
        if len(seen) >= self._ways:
            self.correct += 1
            return
        self._pending.setdefault(set_index, []).append((victim_tag, seen))

    def observe(self, set_index: int, tag: int) -> None:
        keep = []
        for victim_tag, seen in self._pending[set_index]:
            if victim_tag == tag:
                self.wrong += 1
                continue
            seen.add(tag)
            if len(seen) >= self._ways:
                self.correct += 1
                continue
            keep.append((victim_tag, seen))
        if keep:
            self._pending[set_index] = keep
        else:
            del self._pending[set_index]

    def finish(self) -> None:
        for entries in self._pending.values():
            self.correct += len(entries)
        self._pending.clear()


# ---------------------------------------------------------------------------
# Cache model
# ---------------------------------------------------------------------------

class Cache:
    """A set-associative cache driven by one ReplacementPolicy."""

    __slots__ = (
        "geometry", "policy", "sets", "clock", "ledger",
        "_offset_bits", "_set_mask", "_tag_shift",
        "evicted_tag", "evicted_dead",
    )

    def __init__(
        self,
        geometry: CacheGeometry,
        policy: ReplacementPolicy,
        rng: RunRandom,
        ledger: Optional[DeadPredictionLedger] = None,
    ) -> None:
        self.geometry = geometry
        self.policy = policy
        self.sets = [CacheSet(i, geometry.ways) for i in range(geometry.num_sets)]
        self.clock = 0
        self.ledger = ledger
        self._offset_bits = geometry.offset_bits
        self._set_mask = geometry.num_sets - 1
        self._tag_shift = geometry.offset_bits + geometry.set_bits
        self.evicted_tag: Optional[int] = None
        self.evicted_dead = False
        policy.attach(self, rng)
        for cset in self.sets:
            policy.init_set(cset)

    def access(self, access: MemoryAccess) -> int:
        """Process one reference; returns HIT, INSERTED or BYPASSED."""
        address = access.address
        cset = self.sets[(address >> self._offset_bits) & self._set_mask]
        tag = address >> self._tag_shift
        policy = self.policy
        ledger = self.ledger
        self.evicted_tag = None
        if ledger is not None and ledger.has_pending(cset.index):
            ledger.observe(cset.index, tag)

        way = cset.lookup.get(tag)
        if way is not None:
            policy.on_hit(cset, way, access)
            self.clock += 1
            return HIT

        if not policy.decide_insert(cset, access):
            self.clock += 1
            return BYPASSED

        if cset.valid_count < len(cset.slots):
            way = cset.free_way()
            cset.valid_count += 1
        else:
            way = policy.choose_victim(cset, access)
            victim = cset.slots[way]
            assert victim.valid, f"policy {policy.name} chose invalid way {way} in set {cset.index}"
            dead = policy.predicted_dead(cset, way)
            policy.on_evict(cset, way)
            del cset.lookup[victim.tag]
            self.evicted_tag = victim.tag
            self.evicted_dead = dead
            if dead and ledger is not None:
                ledger.flag(cset.index, victim.tag, tag)
            victim.clear()

        slot = cset.slots[way]
        slot.valid = True
        slot.tag = tag
        cset.lookup[tag] = way
        assert len(cset.lookup) <= len(cset.slots)
        policy.on_insert(cset, way, access)
        self.clock += 1
        return INSERTED

    def contains(self, address: int) -> bool:
        cset = self.sets[(address >> self._offset_bits) & self._set_mask]
        return (address >> self._tag_shift) in cset.lookup


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def simulate(
    trace: Trace,
    geometry: CacheGeometry,
    policy: ReplacementPolicy,
    seed: int = 0,
    interval: int = DEFAULT_INTERVAL,
    reuse_cap: Optional[int] = None,
) -> SimReport:
    """
    Run `trace` through a cache of `geometry` managed by `policy`.

    Identical (trace, geometry, policy configuration, seed) give identical reports.
    `reuse_cap` additionally collects a reuse-distance histogram capped at that distance.
    """
    rng = RunRandom(seed)
    ledger = DeadPredictionLedger(geometry.ways)
    cache = Cache(geometry, policy, rng, ledger)
    report = SimReport(policy.name, trace.digest(), geometry)
    tracker = None
    if reuse_cap is not None:
        tracker = StackDistanceTracker(geometry, reuse_cap)

    logger.info("simulating %s on %s: %d accesses", policy.name, geometry, len(trace))
    hint_accesses = report.hint_accesses
    hint_hits = report.hint_hits
    next_interval = interval
    hits = bypasses = evictions = dead_evictions = 0
    n = instructions = 0
    for access in trace:
        n += 1
        instructions += access.inst_delta
        if tracker is not None:
            tracker.observe(access.address)
        code = cache.access(access)
        if code == HIT:
            hits += 1
        elif code == BYPASSED:
            bypasses += 1
        elif cache.evicted_tag is not None:
            evictions += 1
            if cache.evicted_dead:
                dead_evictions += 1
        if access.hint_valid:
            hint_accesses[access.reuse_hint] += 1
            if code == HIT:
                hint_hits[access.reuse_hint] += 1
        if n == next_interval:
            report.accesses = n
            report.hits = hits
            report.misses = n - hits
            report.total_instructions = instructions
            policy.on_interval(report)
            next_interval += interval

    ledger.finish()
    report.accesses = n
    report.hits = hits
    report.misses = n - hits
    report.bypasses = bypasses
    report.insertions = report.misses - bypasses
    report.evictions = evictions
    report.dead_predicted_evictions = dead_evictions
    report.dead_predictions_correct = ledger.correct
    report.total_instructions = trace.total_instructions
    if tracker is not None:
        report.reuse_histogram = tracker.histogram()
    assert ledger.correct + ledger.wrong == dead_evictions
    logger.info(
        "%s: %d hits, %d misses (%d bypassed), %d evictions",
        policy.name, report.hits, report.misses, bypasses, evictions,
    )
    return report


def filter_trace(trace: Trace, geometry: CacheGeometry) -> Trace:
    """
    Drop the accesses that hit in a small LRU cache of `geometry`, approximating
    the higher-level caches that sit in front of the LLC.
    """
    from .baseline import LruPolicy  # circular

    cache = Cache(geometry, LruPolicy(), RunRandom(0))
    keep = np.fromiter((cache.access(a) != HIT for a in trace), dtype=bool, count=len(trace))
    logger.info("filter %s kept %d of %d accesses", geometry, int(keep.sum()), len(trace))
    return trace.select(keep)
