"""
Baseline replacement policies: the LRU insertion family (LRU, LIP, BIP, DIP),
k-bit NRU, the RRIP family (SRRIP, BRRIP, DRRIP) and Random.
"""
from __future__ import annotations

from ._data import BIMODAL_EPSILON, LEADER_SETS, PSEL_BITS
from ._errors import InvalidSpecError
from ._recency import RecencyStack
from .dueling import A, make_duel
from .engine import CacheSet, ReplacementPolicy


def _check_epsilon(epsilon: float) -> float:
    if not 0.0 < epsilon <= 1.0:
        raise InvalidSpecError(f"epsilon must be in (0, 1], got {epsilon}")
    return epsilon


# ---------------------------------------------------------------------------
# Victim scans shared by the policies (pinned blocks are never candidates)
# ---------------------------------------------------------------------------

def rrpv_victim(slots, max_rrpv: int) -> int:
    """
    Lowest-index unpinned way at max_rrpv; if there is none, every block ages
    (saturating) until one gets there. At most max_rrpv aging rounds.
    """
    top = -1
    for slot in slots:
        if not slot.pinned and slot.rrpv > top:
            top = slot.rrpv
    if top < 0:
        raise LookupError("no evictable way")
    if top < max_rrpv:
        deficit = max_rrpv - top
        for slot in slots:
            slot.rrpv = min(max_rrpv, slot.rrpv + deficit)
    for way, slot in enumerate(slots):
        if not slot.pinned and slot.rrpv == max_rrpv:
            return way
    raise AssertionError("RRPV scan did not terminate")


def nru_victim(slots, max_class: int, rng) -> int:
    """Random unpinned member of the oldest NRU class, aging every block until that class is non-empty."""
    rrpv_victim(slots, max_class)
    members = [w for w, s in enumerate(slots) if not s.pinned and s.rrpv == max_class]
    return members[0] if len(members) == 1 else rng.choice(members)


# ---------------------------------------------------------------------------
# LRU insertion family
# ---------------------------------------------------------------------------

class LruPolicy(ReplacementPolicy):
    """True LRU: insert MRU, promote MRU on hit, evict the LRU block."""

    name = "lru"

    def init_set(self, cset: CacheSet) -> None:
        cset.state = RecencyStack()

    def position_of(self, cset: CacheSet, way: int) -> int:
        return cset.state.position(way)

    def choose_victim(self, cset, access) -> int:
        slots = cset.slots
        return cset.state.lru(lambda way: slots[way].pinned)

    def on_evict(self, cset, way) -> None:
        cset.state.remove(way)

    def on_insert(self, cset, way, access) -> None:
        cset.state.push_mru(way)

    def on_hit(self, cset, way, access) -> None:
        cset.state.promote(way)


class LipPolicy(LruPolicy):
    """LRU Insertion Policy: new blocks enter at the LRU position."""

    name = "lip"

    def on_insert(self, cset, way, access) -> None:
        cset.state.push_lru(way)


class BipPolicy(LruPolicy):
    """Bimodal Insertion Policy: MRU with probability epsilon, LRU otherwise."""

    name = "bip"

    def __init__(self, epsilon: float = BIMODAL_EPSILON) -> None:
        self.epsilon = _check_epsilon(epsilon)

    def on_insert(self, cset, way, access) -> None:
        if self.rng.random() < self.epsilon:
            cset.state.push_mru(way)
        else:
            cset.state.push_lru(way)


class DipPolicy(LruPolicy):
    """Dynamic Insertion Policy: set dueling between LRU (A) and BIP (B)."""

    name = "dip"

    def __init__(self, epsilon: float = BIMODAL_EPSILON, leaders: int = LEADER_SETS,
                 psel_bits: int = PSEL_BITS) -> None:
        self.epsilon = _check_epsilon(epsilon)
        self.leaders = leaders
        self.psel_bits = psel_bits

    def attach(self, cache, rng) -> None:
        super().attach(cache, rng)
        self.duel = make_duel(
            self.geometry, LruPolicy, lambda: BipPolicy(self.epsilon), rng, self.leaders, self.psel_bits
        )

    def decide_insert(self, cset, access) -> bool:
        self.duel.observe(access)
        self.duel.record_miss(cset.index)
        return True

    def on_insert(self, cset, way, access) -> None:
        if self.duel.choice(cset.index) == A or self.rng.random() < self.epsilon:
            cset.state.push_mru(way)
        else:
            cset.state.push_lru(way)

    def on_hit(self, cset, way, access) -> None:
        self.duel.observe(access)
        cset.state.promote(way)


# ---------------------------------------------------------------------------
# NRU
# ---------------------------------------------------------------------------

class NruPolicy(ReplacementPolicy):
    """
    k-bit NRU: blocks sit in 2^k recency classes (0 = most recent). Insert and
    hit go to class 0; the victim is a random member of the oldest class.
    """

    def __init__(self, bits: int = 2) -> None:
        if not 1 <= bits <= 4:
            raise InvalidSpecError(f"NRU width must be 1..4 bits, got {bits}")
        self.bits = bits
        self.max_class = (1 << bits) - 1
        self.name = f"nru{bits}"

    def position_of(self, cset: CacheSet, way: int) -> int:
        return cset.slots[way].rrpv

    def choose_victim(self, cset, access) -> int:
        return nru_victim(cset.slots, self.max_class, self.rng)

    def on_insert(self, cset, way, access) -> None:
        cset.slots[way].rrpv = 0

    def on_hit(self, cset, way, access) -> None:
        cset.slots[way].rrpv = 0


# ---------------------------------------------------------------------------
# RRIP family
# ---------------------------------------------------------------------------

class SrripPolicy(ReplacementPolicy):
    """Static RRIP: insert at max-1, hit resets to 0, evict the first block at max."""

    def __init__(self, bits: int = 2) -> None:
        if bits not in (2, 3):
            raise InvalidSpecError(f"RRPV width must be 2 or 3 bits, got {bits}")
        self.bits = bits
        self.max_rrpv = (1 << bits) - 1
        self.name = f"srrip{bits}"

    def insertion_rrpv(self, cset, access) -> int:
        return self.max_rrpv - 1

    def choose_victim(self, cset, access) -> int:
        return rrpv_victim(cset.slots, self.max_rrpv)

    def on_insert(self, cset, way, access) -> None:
        cset.slots[way].rrpv = self.insertion_rrpv(cset, access)

    def on_hit(self, cset, way, access) -> None:
        cset.slots[way].rrpv = 0


class BrripPolicy(SrripPolicy):
    """Bimodal RRIP: insert at max, except max-1 with probability epsilon."""

    def __init__(self, bits: int = 2, epsilon: float = BIMODAL_EPSILON) -> None:
        super().__init__(bits)
        self.epsilon = _check_epsilon(epsilon)
        self.name = f"brrip{bits}"

    def insertion_rrpv(self, cset, access) -> int:
        if self.rng.random() < self.epsilon:
            return self.max_rrpv - 1
        return self.max_rrpv


class DrripPolicy(SrripPolicy):
    """Dynamic RRIP: set dueling between SRRIP (A) and BRRIP (B)."""

    def __init__(self, bits: int = 2, epsilon: float = BIMODAL_EPSILON, leaders: int = LEADER_SETS,
                 psel_bits: int = PSEL_BITS) -> None:
        super().__init__(bits)
        self.epsilon = _check_epsilon(epsilon)
        self.leaders = leaders
        self.psel_bits = psel_bits
        self.name = f"drrip{bits}"

    def attach(self, cache, rng) -> None:
        super().attach(cache, rng)
        self.duel = make_duel(
            self.geometry,
            lambda: SrripPolicy(self.bits),
            lambda: BrripPolicy(self.bits, self.epsilon),
            rng,
            self.leaders,
            self.psel_bits,
        )

    def decide_insert(self, cset, access) -> bool:
        self.duel.observe(access)
        self.duel.record_miss(cset.index)
        return True

    def insertion_rrpv(self, cset, access) -> int:
        if self.duel.choice(cset.index) == A or self.rng.random() < self.epsilon:
            return self.max_rrpv - 1
        return self.max_rrpv

    def on_hit(self, cset, way, access) -> None:
        self.duel.observe(access)
        cset.slots[way].rrpv = 0


# ---------------------------------------------------------------------------
# Random
# ---------------------------------------------------------------------------

class RandomPolicy(ReplacementPolicy):
    name = "random"

    def choose_victim(self, cset, access) -> int:
        ways = [w for w, s in enumerate(cset.slots) if not s.pinned]
        return self.rng.choice(ways)


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------

def lru_policy() -> LruPolicy:
    return LruPolicy()


def lip_policy() -> LipPolicy:
    return LipPolicy()


def bip_policy(epsilon: float = BIMODAL_EPSILON) -> BipPolicy:
    return BipPolicy(epsilon)


def dip_policy(epsilon: float = BIMODAL_EPSILON) -> DipPolicy:
    return DipPolicy(epsilon)


def nru_policy(bits: int = 2) -> NruPolicy:
    return NruPolicy(bits)


def srrip_policy(m: int = 2) -> SrripPolicy:
    return SrripPolicy(m)


def brrip_policy(m: int = 2, epsilon: float = BIMODAL_EPSILON) -> BrripPolicy:
    return BrripPolicy(m, epsilon)


def drrip_policy(m: int = 2) -> DrripPolicy:
    return DrripPolicy(m)
