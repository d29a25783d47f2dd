"""
Leeway: dead-block prediction from live distances.

A block's live distance is the largest stack distance at which it hit during
one generation. Sampler sets measure it and train a PC-indexed Live Distance
Predictor Table (LDPT). Every insertion copies the PC's stable live distance
into the block as its predicted live distance. A block sitting deeper in the
stack than that prediction is dead and is evicted first; a PC whose stable
live distance is 0 has its blocks bypassed.

Two LDPT update policies differ in how many consecutive disagreeing evictions
(their variance tolerance thresholds) they need before moving the stable
value: BOP is slow to grow and quick to drop, ROP the opposite. In dynamic
mode both train on their own sampler sets and the follower sets use whichever
missed less in the last interval.
"""
from __future__ import annotations

import enum
import logging
import re

from ._data import (
    LDPT_ENTRIES,
    LEEWAY_BANKS,
    LEEWAY_INSTRUCTION_INTERVAL,
    LEEWAY_SAMPLER_INTERVAL,
    LEEWAY_SAMPLER_SETS,
    VTT_MAX,
)
from ._errors import InvalidSpecError
from ._recency import RecencyStack
from .baseline import nru_victim
from .engine import ReplacementPolicy
from .ship import strided_sets

logger = logging.getLogger(__name__)

FOLLOWER = -1


class LeewayMode(enum.Enum):
    DYNAMIC = "dynamic"
    STATIC_BOP = "static-bop"
    STATIC_ROP = "static-rop"
    STATIC_VTT7 = "static-vtt7"

    @property
    def banks(self) -> tuple[str, ...]:
        if self is LeewayMode.DYNAMIC:
            return ("bop", "rop")
        return (self.value.split("-")[1],)


class LiveDistanceTable:
    """
    Tagless LDPT bank. Each entry holds a stable live distance, a 3-bit
    variance count and the direction of the pending change.
    """

    __slots__ = ("name", "entries", "vtt_increase", "vtt_decrease", "maxpos", "stable", "count", "increasing")

    def __init__(self, name: str, entries: int, vtt_increase: int, vtt_decrease: int, maxpos: int) -> None:
        for vtt in (vtt_increase, vtt_decrease):
            if not 1 <= vtt <= VTT_MAX:
                raise InvalidSpecError(f"variance tolerance thresholds must be in 1..{VTT_MAX}, got {vtt}")
        if entries < 1:
            raise InvalidSpecError(f"LDPT needs at least one entry, got {entries}")
        self.name = name
        self.entries = entries
        self.vtt_increase = vtt_increase
        self.vtt_decrease = vtt_decrease
        self.maxpos = maxpos
        # unseen PCs start at maxpos so they are never bypassed
        self.stable = [maxpos] * entries
        self.count = [0] * entries
        self.increasing = [False] * entries

    def lookup(self, signature: int) -> int:
        return self.stable[signature % self.entries]

    def train(self, signature: int, live_distance: int) -> None:
        """Fold one evicted block's live distance into its PC's entry."""
        i = signature % self.entries
        s = self.stable[i]
        if live_distance == s:
            self.count[i] = 0
            return
        up = live_distance > s
        if up != self.increasing[i]:
            self.increasing[i] = up
            self.count[i] = 1
        else:
            self.count[i] = min(self.count[i] + 1, VTT_MAX)
        if self.count[i] >= (self.vtt_increase if up else self.vtt_decrease):
            self.stable[i] = live_distance
            self.count[i] = 0

    def __repr__(self) -> str:
        return f"LiveDistanceTable({self.name!r}, vtt=({self.vtt_increase},{self.vtt_decrease}), maxpos={self.maxpos})"


def duel_select(miss_counters: "list[int] | tuple[int, ...]", incumbent: int) -> int:
    """Index of the bank with the fewest misses; a tie keeps the incumbent."""
    best = min(miss_counters)
    if miss_counters[incumbent] == best:
        return incumbent
    return miss_counters.index(best)


def _parse_base(base: str) -> int:
    """0 for LRU, otherwise the NRU width in bits."""
    if base == "lru":
        return 0
    m = re.fullmatch(r"nru([1-4])", base)
    if not m:
        raise InvalidSpecError(f"Leeway base must be lru or nru1..nru4, got {base!r}")
    return int(m.group(1))


class LeewayPolicy(ReplacementPolicy):
    can_bypass = True

    def __init__(
        self,
        mode: "LeewayMode | str" = LeewayMode.DYNAMIC,
        base: str = "lru",
        ldpt_entries: int = LDPT_ENTRIES,
        sampler_sets: int = LEEWAY_SAMPLER_SETS,
        interval: int = LEEWAY_SAMPLER_INTERVAL,
        instruction_interval: int = LEEWAY_INSTRUCTION_INTERVAL,
        bop_probability: "float | None" = None,
        rop_probability: "float | None" = None,
    ) -> None:
        self.mode = LeewayMode(mode)
        self.nru_bits = _parse_base(base)
        self.ldpt_entries = ldpt_entries
        self.sampler_count = sampler_sets
        self.interval = interval
        self.instruction_interval = instruction_interval
        probabilities = {name: bank[2] for name, bank in LEEWAY_BANKS.items()}
        if bop_probability is not None:
            probabilities["bop"] = bop_probability
        if rop_probability is not None:
            probabilities["rop"] = rop_probability
        for name, p in probabilities.items():
            if not 0.0 <= p <= 1.0:
                raise InvalidSpecError(f"{name} sampler insertion probability must be in [0, 1], got {p}")
        self.probability = [probabilities[name] for name in self.mode.banks]
        if self.mode is LeewayMode.DYNAMIC:
            self.name = f"leeway-{base}"
        else:
            self.name = f"leeway-{self.mode.value}" + ("" if base == "lru" else f"-{base}")

    def attach(self, cache, rng) -> None:
        super().attach(cache, rng)
        geometry = self.geometry
        if self.nru_bits:
            self.max_class = (1 << self.nru_bits) - 1
            self.maxpos = 1 << self.nru_bits
        else:
            self.maxpos = geometry.ways
        self.banks = [
            LiveDistanceTable(name, self.ldpt_entries, *LEEWAY_BANKS[name][:2], self.maxpos)
            for name in self.mode.banks
        ]
        self.tables = {bank.name: bank for bank in self.banks}

        self.role = [FOLLOWER] * geometry.num_sets
        if self.mode is LeewayMode.DYNAMIC:
            per = min(self.sampler_count, max(1, geometry.num_sets // 2))
            for slot, index in enumerate(strided_sets(geometry.num_sets, 2 * per)):
                self.role[index] = slot % 2
        else:
            for index in strided_sets(geometry.num_sets, self.sampler_count):
                self.role[index] = 0

        self.winner = 0
        self.misses = [0] * len(self.banks)
        self.sampler_accesses = 0
        self.instructions = 0
        self.last_duel_instructions = 0
        self._victim_dead = False
        logger.debug(
            "%s: maxpos %d, %d sampler sets, banks %s",
            self.name, self.maxpos, sum(r != FOLLOWER for r in self.role), [b.name for b in self.banks],
        )

    def stable_live_distance(self, signature: int, bank: "str | None" = None) -> int:
        table = self.tables[bank] if bank is not None else self.banks[self.winner]
        return table.lookup(signature)

    # ------------------------------------------------------------------
    # Base recency (LRU stack or NRU classes)
    # ------------------------------------------------------------------

    def init_set(self, cset) -> None:
        if not self.nru_bits:
            cset.state = RecencyStack()

    def position_of(self, cset, way: int) -> int:
        """0-based stack position (LRU) or NRU class of a valid block."""
        if self.nru_bits:
            return cset.slots[way].rrpv
        return cset.state.position(way)

    def _promote(self, cset, way: int) -> None:
        if self.nru_bits:
            cset.slots[way].rrpv = 0
        else:
            cset.state.promote(way)

    # ------------------------------------------------------------------
    # Policy contract
    # ------------------------------------------------------------------

    def _sampled(self) -> None:
        self.sampler_accesses += 1
        if self.sampler_accesses >= self.interval:
            self._duel()

    def decide_insert(self, cset, access) -> bool:
        self.instructions += access.inst_delta
        role = self.role[cset.index]
        if role != FOLLOWER:
            self.misses[role] += 1
            self._sampled()
            bank = role
        else:
            bank = self.winner
        if self.banks[bank].lookup(access.pc_signature) != 0:
            return True
        if role == FOLLOWER:
            return False
        return self.rng.random() < self.probability[bank]

    def choose_victim(self, cset, access) -> int:
        slots = cset.slots
        best = None
        best_key = None
        for way, slot in enumerate(slots):
            if slot.pinned:
                continue
            pos = self.position_of(cset, way)
            if pos + 1 > slot.predicted:
                key = (slot.predicted, -pos, way)
                if best_key is None or key < best_key:
                    best, best_key = way, key
        if best is not None:
            self._victim_dead = True
            return best
        self._victim_dead = False
        if self.nru_bits:
            return nru_victim(slots, self.max_class, self.rng)
        return cset.state.lru(lambda way: slots[way].pinned)

    def predicted_dead(self, cset, way) -> bool:
        return self._victim_dead

    def on_evict(self, cset, way) -> None:
        role = self.role[cset.index]
        if role != FOLLOWER:
            slot = cset.slots[way]
            self.banks[role].train(slot.signature, slot.live)
        if not self.nru_bits:
            cset.state.remove(way)

    def on_insert(self, cset, way, access) -> None:
        role = self.role[cset.index]
        bank = role if role != FOLLOWER else self.winner
        slot = cset.slots[way]
        slot.predicted = self.banks[bank].lookup(access.pc_signature)
        slot.live = 0
        slot.signature = access.pc_signature
        if self.nru_bits:
            slot.rrpv = 0
        else:
            cset.state.push_mru(way)

    def on_hit(self, cset, way, access) -> None:
        self.instructions += access.inst_delta
        slot = cset.slots[way]
        distance = self.position_of(cset, way) + 1
        role = self.role[cset.index]
        if role != FOLLOWER:
            if distance > slot.live:
                slot.live = distance
        if distance > slot.predicted:
            slot.predicted = distance
        self._promote(cset, way)
        if role != FOLLOWER:
            self._sampled()

    def on_interval(self, counters) -> None:
        if self.instructions - self.last_duel_instructions >= self.instruction_interval:
            self._duel()

    def _duel(self) -> None:
        if len(self.banks) > 1:
            winner = duel_select(self.misses, self.winner)
            if winner != self.winner:
                logger.debug(
                    "%s: followers switch to %s (misses %s)",
                    self.name, self.banks[winner].name, dict(zip(self.mode.banks, self.misses)),
                )
            self.winner = winner
        self.misses = [0] * len(self.banks)
        self.sampler_accesses = 0
        self.last_duel_instructions = self.instructions


def leeway_policy(mode: "LeewayMode | str" = LeewayMode.DYNAMIC, base: str = "lru", **options) -> LeewayPolicy:
    return LeewayPolicy(mode, base, **options)
