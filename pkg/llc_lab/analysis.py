"""
Post-run analytics: per-set reuse (stack) distance distributions and
miss-reduction comparisons between policies.
"""
from __future__ import annotations

import logging
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from ._errors import ConfigurationError, InvalidSpecError, TraceMismatchError
from .geometry import CacheGeometry
from .report import SimReport
from .trace import ReuseHint, Trace

logger = logging.getLogger(__name__)

DEFAULT_CAP = 64

COLD = 0


class StackDistanceTracker:
    """
    Online per-set stack distances. The distance of an access is the number of
    distinct blocks referenced in its set since the previous reference to the
    same block, the block itself included; a first touch is COLD (0).
    Distances above `cap` are reported as cap + 1.
    """

    __slots__ = ("cap", "counts", "_stacks", "_seen", "_offset_bits", "_set_mask")

    def __init__(self, geometry: CacheGeometry, cap: int = DEFAULT_CAP) -> None:
        if cap < 1:
            raise InvalidSpecError(f"cap must be >= 1, got {cap}")
        self.cap = cap
        # index 0 = cold, 1..cap = exact distance, cap + 1 = beyond cap
        self.counts = [0] * (cap + 2)
        self._stacks: list[list[int]] = [[] for _ in range(geometry.num_sets)]
        self._seen: set[int] = set()
        self._offset_bits = geometry.offset_bits
        self._set_mask = geometry.num_sets - 1

    def observe(self, address: int) -> int:
        block = address >> self._offset_bits
        stack = self._stacks[block & self._set_mask]
        try:
            distance = stack.index(block) + 1
            del stack[distance - 1]
        except ValueError:
            if block in self._seen:
                distance = self.cap + 1
            else:
                self._seen.add(block)
                distance = COLD
        stack.insert(0, block)
        if len(stack) > self.cap:
            stack.pop()
        self.counts[distance] += 1
        return distance

    def histogram(self) -> ReuseDistanceHistogram:
        return ReuseDistanceHistogram(self.counts)


class ReuseDistanceHistogram:
    """Access counts per stack distance: cold, 1..cap, and beyond cap."""

    __slots__ = ("counts",)

    def __init__(self, counts) -> None:
        counts = np.array(counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 3:
            raise InvalidSpecError("histogram needs cold, at least one distance and beyond-cap buckets")
        counts.setflags(write=False)
        self.counts = counts

    @property
    def cap(self) -> int:
        return self.counts.size - 2

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def cold(self) -> int:
        return int(self.counts[COLD])

    @property
    def beyond(self) -> int:
        return int(self.counts[-1])

    def count(self, distance: int) -> int:
        return int(self.counts[distance])

    def fraction_within(self, distance: int) -> float:
        """Share of all accesses whose distance is 1..distance (an LRU cache with that many ways hits them)."""
        if not self.total:
            return 0.0
        return float(self.counts[1:min(distance, self.cap) + 1].sum() / self.total)

    def labels(self) -> list[str]:
        return [str(d) for d in range(1, self.cap + 1)] + [f">{self.cap}", "inf"]

    def to_frame(self, cumulative: bool = False) -> pd.DataFrame:
        """One row per bucket, ordered by distance with cold (inf) last."""
        counts = np.concatenate((self.counts[1:], self.counts[:1]))
        total = counts.sum()
        frame = pd.DataFrame({
            "distance": self.labels(),
            "count": counts,
            "fraction": counts / total if total else np.zeros(counts.size),
        })
        if cumulative:
            frame["cumulative"] = frame["fraction"].cumsum()
        return frame

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ReuseDistanceHistogram):
            return np.array_equal(self.counts, other.counts)
        return NotImplemented

    def __repr__(self) -> str:
        return f"ReuseDistanceHistogram(cap={self.cap}, total={self.total}, cold={self.cold})"


def reuse_distance_distribution(
    trace: Trace,
    geometry: CacheGeometry,
    cap: int = DEFAULT_CAP,
) -> ReuseDistanceHistogram:
    tracker = StackDistanceTracker(geometry, cap)
    for address in trace.addresses.tolist():
        tracker.observe(address)
    histogram = tracker.histogram()
    logger.info("%r over %s", histogram, geometry)
    return histogram


def cumulative(histogram: ReuseDistanceHistogram) -> pd.DataFrame:
    return histogram.to_frame(cumulative=True)


# ---------------------------------------------------------------------------
# Policy comparison
# ---------------------------------------------------------------------------

COMPARE_COLUMNS = [
    "policy", "misses", "misses_eliminated_pct", "bypasses", "coverage", "accuracy", "high_reuse_hit_rate",
]


def compare(reports: Iterable[SimReport], baseline: Optional[str] = "lru") -> pd.DataFrame:
    """
    One row per report, in input order, with the percentage of the baseline's
    misses each policy eliminates: 100 * (base - misses) / base.
    """
    reports = list(reports)
    if not reports:
        return pd.DataFrame(columns=COMPARE_COLUMNS)
    first = reports[0]
    for r in reports[1:]:
        if r.trace_id != first.trace_id or r.geometry != first.geometry:
            raise TraceMismatchError(
                f"cannot compare {r.policy} on {r.trace_id}/{r.geometry} "
                f"with {first.policy} on {first.trace_id}/{first.geometry}"
            )
    by_name = {r.policy: r for r in reports}
    if baseline not in by_name:
        raise ConfigurationError(f"baseline {baseline!r} is not among the compared policies {list(by_name)}")
    base = by_name[baseline].misses

    rows = []
    for r in reports:
        eliminated = 100.0 * (base - r.misses) / base if base else 0.0
        rows.append({
            "policy": r.policy,
            "misses": r.misses,
            "misses_eliminated_pct": eliminated,
            "bypasses": r.bypasses,
            "coverage": r.coverage,
            "accuracy": r.accuracy,
            "high_reuse_hit_rate": r.hint_hit_rate(ReuseHint.HIGH),
        })
    return pd.DataFrame(rows, columns=COMPARE_COLUMNS)
