"""
GRASP: software-hinted replacement for graph analytics.

Address Bound Registers (ABRs) describe the Property Arrays of a graph
application. Each array's first LLC-capacity share is the High-Reuse region,
the next share Moderate-Reuse, and every other address Low-Reuse. The hint
then steers the RRPV a block is inserted with and how a hit promotes it; with
no hint the policy is plain DRRIP.
"""
from __future__ import annotations

import enum
import logging
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from ._data import BIMODAL_EPSILON, FLAG_HINT_VALID, GRASP_MAX_ARRAYS, GRASP_RRPV_BITS, GRASP_TABLE, LEADER_SETS, PSEL_BITS
from ._errors import ConfigurationError, InvalidSpecError
from .baseline import DrripPolicy
from .trace import MemoryAccess, ReuseHint, Trace

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Address classification
# ---------------------------------------------------------------------------

class AddressBoundRegister(NamedTuple):
    """Bounds [start, end) of one Property Array."""

    start: int
    end: int

    @classmethod
    def parse(cls, s: str) -> AddressBoundRegister:
        """Parse "start:end"; either bound may be decimal or 0x-prefixed hex."""
        try:
            start, end = (int(part, 0) for part in s.split(":"))
        except ValueError:
            raise InvalidSpecError(f"ABR must look like start:end, got {s!r}") from None
        return cls(start, end)


class RegionMap:
    """
    High and Moderate regions of every registered array.

    With S = llc_capacity // array_count, an array [start, end) has
    High = [start, start + S) and Moderate = [start + S, start + 2S), both
    clipped to the array.
    """

    __slots__ = ("abrs", "share", "high", "moderate", "_bounds", "_codes")

    def __init__(
        self,
        abrs: Iterable[AddressBoundRegister],
        llc_capacity: int,
        max_arrays: int = GRASP_MAX_ARRAYS,
    ) -> None:
        abrs = sorted(AddressBoundRegister(*a) for a in abrs)
        if len(abrs) > max_arrays:
            raise ConfigurationError(f"{len(abrs)} ABRs registered, at most {max_arrays} supported")
        for a in abrs:
            if not 0 <= a.start < a.end:
                raise InvalidSpecError(f"ABR {a.start:#x}:{a.end:#x} is empty or negative")
        for prev, cur in zip(abrs, abrs[1:]):
            if cur.start < prev.end:
                raise ConfigurationError(
                    f"ABRs {prev.start:#x}:{prev.end:#x} and {cur.start:#x}:{cur.end:#x} overlap"
                )
        self.abrs = tuple(abrs)
        self.share = llc_capacity // len(abrs) if abrs else 0
        s = self.share
        self.high = tuple((a.start, min(a.start + s, a.end)) for a in abrs)
        self.moderate = tuple((min(a.start + s, a.end), min(a.start + 2 * s, a.end)) for a in abrs)

        # Sorted boundary list for vectorized lookup: interval i is [bounds[i], bounds[i+1])
        # and codes[i] its hint; addresses outside every array fall in LOW intervals.
        bounds = [0]
        codes = []
        for (hs, he), (ms, me), a in zip(self.high, self.moderate, abrs):
            if hs > bounds[-1]:
                codes.append(ReuseHint.LOW)
                bounds.append(hs)
            for lo, hi, code in ((hs, he, ReuseHint.HIGH), (ms, me, ReuseHint.MODERATE), (me, a.end, ReuseHint.LOW)):
                if hi > lo:
                    codes.append(code)
                    bounds.append(hi)
        codes.append(ReuseHint.LOW)
        self._bounds = np.array(bounds, dtype=np.uint64)
        self._codes = np.array(codes, dtype=np.uint8)

    @classmethod
    def for_geometry(cls, abrs: Iterable[AddressBoundRegister], geometry) -> RegionMap:
        return cls(abrs, geometry.capacity)

    def __len__(self) -> int:
        return len(self.abrs)

    def __bool__(self) -> bool:
        return bool(self.abrs)

    def classify(self, address: int) -> ReuseHint:
        if not self.abrs:
            return ReuseHint.DEFAULT
        for start, end in self.high:
            if start <= address < end:
                return ReuseHint.HIGH
        for start, end in self.moderate:
            if start <= address < end:
                return ReuseHint.MODERATE
        return ReuseHint.LOW

    def classify_many(self, addresses: np.ndarray) -> np.ndarray:
        """Vectorized classify; returns a uint8 array of ReuseHint values."""
        addresses = np.asarray(addresses, dtype=np.uint64)
        if not self.abrs:
            return np.zeros(addresses.shape, dtype=np.uint8)
        idx = np.searchsorted(self._bounds, addresses, side="right") - 1
        return self._codes[idx]

    def __repr__(self) -> str:
        arrays = ", ".join(f"{a.start:#x}:{a.end:#x}" for a in self.abrs)
        return f"RegionMap([{arrays}], share={self.share})"


def classify(address: int, region_map: RegionMap) -> ReuseHint:
    return region_map.classify(address)


def annotate_hints(trace: Trace, region_map: RegionMap) -> Trace:
    """Bake the ABR classification of every record into the trace."""
    return trace.with_hints(region_map.classify_many(trace.addresses))


class HintSource:
    """
    Where a policy gets an access's reuse hint: live from a RegionMap, or from
    the hint carried by the trace record. When both are present they must agree.
    """

    __slots__ = ("region_map",)

    def __init__(self, region_map: Optional[RegionMap] = None) -> None:
        self.region_map = region_map if region_map else None

    def hint_of(self, access: MemoryAccess) -> ReuseHint:
        if self.region_map is None:
            return access.reuse_hint if access.hint_valid else ReuseHint.DEFAULT
        hint = self.region_map.classify(access.address)
        if access.hint_valid and access.reuse_hint != hint:
            raise ConfigurationError(
                f"trace hint {access.reuse_hint.name} for {access.address:#x} disagrees with "
                f"ABR classification {hint.name}"
            )
        return hint


def check_hint_sources(trace: Trace, region_map: Optional[RegionMap]) -> None:
    """Raise ConfigurationError up front if a hinted trace disagrees with the ABRs anywhere."""
    if not region_map or not trace.has_hints:
        return
    baked = annotate_hints(trace, region_map)
    valid = (trace.flags & FLAG_HINT_VALID) != 0
    if np.any(baked.flags[valid] != trace.flags[valid]):
        first = int(np.flatnonzero(valid & (baked.flags != trace.flags))[0])
        raise ConfigurationError(
            f"trace record {first} carries a reuse hint that disagrees with the ABR classification"
        )


# ---------------------------------------------------------------------------
# Policy
# ---------------------------------------------------------------------------

class GraspVariant(enum.Enum):
    RRIP_PLUS_HINTS = "hints"
    INSERTION_ONLY = "insert"
    FULL = "full"


_HINT_ROWS = {
    ReuseHint.HIGH: GRASP_TABLE["high"],
    ReuseHint.MODERATE: GRASP_TABLE["moderate"],
    ReuseHint.LOW: GRASP_TABLE["low"],
    ReuseHint.DEFAULT: GRASP_TABLE["default"],
}


class GraspPolicy(DrripPolicy):
    """
    DRRIP with hint-specific insertion and hit promotion.

    FULL follows GRASP_TABLE for both; INSERTION_ONLY uses the table on fill
    and RRIP's reset-to-0 on hit; RRIP_PLUS_HINTS inserts High at max-1 and
    everything else at max. Eviction is the unmodified RRPV scan. Accesses with
    a Default hint are handled exactly as DRRIP would.
    """

    def __init__(
        self,
        region_map: Optional[RegionMap] = None,
        variant: GraspVariant = GraspVariant.FULL,
        bits: int = GRASP_RRPV_BITS,
        epsilon: float = BIMODAL_EPSILON,
        leaders: int = LEADER_SETS,
        psel_bits: int = PSEL_BITS,
    ) -> None:
        if bits != GRASP_RRPV_BITS and variant != GraspVariant.RRIP_PLUS_HINTS:
            raise InvalidSpecError(f"GRASP's RRPV table assumes {GRASP_RRPV_BITS}-bit counters, got {bits}")
        super().__init__(bits, epsilon, leaders, psel_bits)
        self.hints = HintSource(region_map)
        self.variant = variant
        self.name = {
            GraspVariant.FULL: "grasp",
            GraspVariant.INSERTION_ONLY: "grasp-insert",
            GraspVariant.RRIP_PLUS_HINTS: "grasp-hints",
        }[variant]

    def insertion_rrpv(self, cset, access) -> int:
        hint = self.hints.hint_of(access)
        if hint == ReuseHint.DEFAULT:
            return super().insertion_rrpv(cset, access)
        if self.variant == GraspVariant.RRIP_PLUS_HINTS:
            return self.max_rrpv - 1 if hint == ReuseHint.HIGH else self.max_rrpv
        return _HINT_ROWS[hint]["insert"]

    def on_hit(self, cset, way, access) -> None:
        self.duel.observe(access)
        slot = cset.slots[way]
        if self.variant == GraspVariant.FULL and _HINT_ROWS[self.hints.hint_of(access)]["hit"] == "dec":
            if slot.rrpv > 0:
                slot.rrpv -= 1
        else:
            slot.rrpv = 0


def grasp_policy(llc_geometry=None, abrs: Sequence[AddressBoundRegister] = (), m: int = GRASP_RRPV_BITS) -> GraspPolicy:
    """GRASP over the ABRs `abrs`; without ABRs it consumes trace hints (or behaves as DRRIP)."""
    region_map = None
    if abrs:
        if llc_geometry is None:
            raise ConfigurationError("ABR classification needs the LLC geometry")
        region_map = RegionMap.for_geometry(abrs, llc_geometry)
        logger.debug("grasp regions: %r", region_map)
    return GraspPolicy(region_map, GraspVariant.FULL, m)


def grasp_variants(kind: "GraspVariant | str", llc_geometry=None,
                   abrs: Sequence[AddressBoundRegister] = ()) -> GraspPolicy:
    """The ablation variants: RRIP_PLUS_HINTS ("hints"), INSERTION_ONLY ("insert") and FULL."""
    kind = GraspVariant(kind)
    policy = grasp_policy(llc_geometry, abrs)
    if kind != GraspVariant.FULL:
        policy = GraspPolicy(policy.hints.region_map, kind)
    return policy
