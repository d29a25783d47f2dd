"""
llc_lab: trace-driven last-level-cache laboratory.

Replays memory-access traces through a set-associative cache model under
baseline, oracle, dead-block-predicting (Leeway) and graph-aware (GRASP,
PIN-X) replacement policies, and generates the graph workloads and vertex
reorderings (DBG and friends) those policies are measured on.
"""

__version__ = "0.1.0"

from ._errors import (
    BadMagicError,
    ConfigurationError,
    FormatError,
    GraphFormatError,
    InfeasibleDegreeSequence,
    InvalidSpecError,
    LabError,
    TraceMismatchError,
    TruncatedDataError,
    VersionMismatchError,
)
from .trace import MemoryAccess, ReuseHint, Trace, read_trace, write_trace
from .patterns import PatternKind, PatternSpec, generate_pattern
from .geometry import CacheGeometry
from .engine import Cache, ReplacementPolicy, filter_trace, simulate
from .report import SimReport
from .baseline import (
    BipPolicy,
    BrripPolicy,
    DipPolicy,
    DrripPolicy,
    LipPolicy,
    LruPolicy,
    NruPolicy,
    RandomPolicy,
    SrripPolicy,
)
from .ship import ShipMemPolicy
from .opt import BeladyPolicy, opt_oracle
from .leeway import LeewayMode, LeewayPolicy, LiveDistanceTable
from .grasp import AddressBoundRegister, GraspPolicy, GraspVariant, RegionMap, annotate_hints
from .pin import PinPolicy
from .graph import (
    CsrGraph,
    Direction,
    gen_graph_trace,
    load_edge_list,
    read_csr,
    skew_metrics,
    synth_powerlaw,
    synth_uniform,
    write_csr,
)
from .reorder import (
    GroupingSpec,
    VertexRemap,
    apply_remap,
    dbg_reorder,
    family_reorder,
    random_reorder,
    read_remap,
    write_remap,
)
from .analysis import ReuseDistanceHistogram, compare, reuse_distance_distribution
from .registry import POLICY_NAMES, PolicyOptions, make_policy, run_policy

__all__ = [
    "AddressBoundRegister",
    "BadMagicError",
    "BeladyPolicy",
    "BipPolicy",
    "BrripPolicy",
    "Cache",
    "CacheGeometry",
    "ConfigurationError",
    "CsrGraph",
    "DipPolicy",
    "Direction",
    "DrripPolicy",
    "FormatError",
    "GraphFormatError",
    "GraspPolicy",
    "GraspVariant",
    "GroupingSpec",
    "InfeasibleDegreeSequence",
    "InvalidSpecError",
    "LabError",
    "LeewayMode",
    "LeewayPolicy",
    "LipPolicy",
    "LiveDistanceTable",
    "LruPolicy",
    "MemoryAccess",
    "NruPolicy",
    "POLICY_NAMES",
    "PatternKind",
    "PatternSpec",
    "PinPolicy",
    "PolicyOptions",
    "RandomPolicy",
    "RegionMap",
    "ReplacementPolicy",
    "ReuseDistanceHistogram",
    "ReuseHint",
    "ShipMemPolicy",
    "SimReport",
    "SrripPolicy",
    "Trace",
    "TraceMismatchError",
    "TruncatedDataError",
    "VersionMismatchError",
    "VertexRemap",
    "annotate_hints",
    "apply_remap",
    "compare",
    "dbg_reorder",
    "family_reorder",
    "filter_trace",
    "gen_graph_trace",
    "generate_pattern",
    "load_edge_list",
    "make_policy",
    "opt_oracle",
    "random_reorder",
    "read_csr",
    "read_remap",
    "read_trace",
    "reuse_distance_distribution",
    "run_policy",
    "simulate",
    "skew_metrics",
    "synth_powerlaw",
    "synth_uniform",
    "write_csr",
    "write_remap",
    "write_trace",
    "__version__",
]
