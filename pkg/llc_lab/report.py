"""SimReport: counters of one simulation run, and CSV/JSON emission."""
from __future__ import annotations

import json
import logging
from typing import TYPE_CHECKING, Iterable, Optional

import pandas as pd

from ._errors import InvalidSpecError
from .trace import ReuseHint

if TYPE_CHECKING:
    from .analysis import ReuseDistanceHistogram
    from .geometry import CacheGeometry

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "trace", "geometry", "policy",
    "accesses", "hits", "misses", "bypasses", "evictions",
    "coverage", "accuracy", "miss_per_kilo_access", "mpki",
    "high_reuse_hit_rate",
]

_FLOAT_FORMAT = "%.6f"


class SimReport:
    """
    Counters of one (trace, geometry, policy) run.

    accesses = hits + misses and misses = insertions + bypasses always hold.
    Bypasses are counted as misses: the data still comes from memory.
    """

    __slots__ = (
        "policy", "trace_id", "geometry",
        "accesses", "hits", "misses", "bypasses", "insertions", "evictions",
        "dead_predicted_evictions", "dead_predictions_correct",
        "total_instructions", "hint_accesses", "hint_hits", "reuse_histogram",
    )

    def __init__(self, policy: str, trace_id: str, geometry: CacheGeometry) -> None:
        self.policy = policy
        self.trace_id = trace_id
        self.geometry = geometry
        self.accesses = 0
        self.hits = 0
        self.misses = 0
        self.bypasses = 0
        self.insertions = 0
        self.evictions = 0
        self.dead_predicted_evictions = 0
        self.dead_predictions_correct = 0
        self.total_instructions = 0
        # indexed by ReuseHint value
        self.hint_accesses = [0, 0, 0, 0]
        self.hint_hits = [0, 0, 0, 0]
        self.reuse_histogram: Optional[ReuseDistanceHistogram] = None

    # ------------------------------------------------------------------
    # Derived metrics
    # ------------------------------------------------------------------

    @property
    def coverage(self) -> float:
        """Fraction of evictions that were predicted dead."""
        return self.dead_predicted_evictions / self.evictions if self.evictions else 0.0

    @property
    def accuracy(self) -> float:
        """Fraction of dead predictions that were right."""
        if not self.dead_predicted_evictions:
            return 0.0
        return self.dead_predictions_correct / self.dead_predicted_evictions

    @property
    def hit_rate(self) -> float:
        return self.hits / self.accesses if self.accesses else 0.0

    @property
    def miss_per_kilo_access(self) -> float:
        return 1000.0 * self.misses / self.accesses if self.accesses else 0.0

    @property
    def mpki(self) -> Optional[float]:
        if not self.total_instructions:
            return None
        return 1000.0 * self.misses / self.total_instructions

    def hint_hit_rate(self, hint: ReuseHint) -> Optional[float]:
        """Hit rate over accesses carrying `hint`; None when no such access was seen."""
        n = self.hint_accesses[hint]
        return self.hint_hits[hint] / n if n else None

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_row(self) -> dict:
        return {
            "trace": self.trace_id,
            "geometry": str(self.geometry),
            "policy": self.policy,
            "accesses": self.accesses,
            "hits": self.hits,
            "misses": self.misses,
            "bypasses": self.bypasses,
            "evictions": self.evictions,
            "coverage": self.coverage,
            "accuracy": self.accuracy,
            "miss_per_kilo_access": self.miss_per_kilo_access,
            "mpki": self.mpki,
            "high_reuse_hit_rate": self.hint_hit_rate(ReuseHint.HIGH),
        }

    def __repr__(self) -> str:
        return (
            f"SimReport({self.policy!r}, accesses={self.accesses}, hits={self.hits}, "
            f"misses={self.misses}, bypasses={self.bypasses}, evictions={self.evictions})"
        )


def reports_to_frame(reports: Iterable[SimReport]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in reports], columns=CSV_COLUMNS)


def format_frame(frame: pd.DataFrame, fmt: str = "csv") -> str:
    """Render a report or comparison table; CSV output is byte-stable for equal inputs."""
    if fmt == "csv":
        return frame.to_csv(index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
    if fmt == "json":
        return json.dumps(json.loads(frame.to_json(orient="records")), indent=2) + "\n"
    raise InvalidSpecError(f"Unknown output format {fmt!r} (expected csv or json)")


def write_frame(frame: pd.DataFrame, path, fmt: str = "csv") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_frame(frame, fmt))
    logger.info("wrote %d rows to %s", len(frame), path)
