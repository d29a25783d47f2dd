"""
Command-line front end: trace generation, vertex reordering, simulation,
policy comparison, oracle runs and trace/graph statistics.

Every subcommand is a thin composition of library operations. Run settings
may come from a flat JSON file (--config) whose keys mirror the long flag
names; flags given on the command line win over the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from ._data import (
    BIMODAL_EPSILON,
    CSR_MAGIC,
    FLAG_HINT_VALID,
    FLAG_WRITE,
    HINT_MASK,
    HINT_SHIFT,
    LDPT_ENTRIES,
    LEADER_SETS,
    LEEWAY_SAMPLER_INTERVAL,
    LEEWAY_SAMPLER_SETS,
    PROP_BYTES,
    PSEL_BITS,
    SHIP_SAMPLER_SETS,
    TRACE_MAGIC,
)
from ._errors import ConfigurationError, InvalidSpecError, LabError
from .analysis import DEFAULT_CAP, compare, reuse_distance_distribution
from .engine import DEFAULT_INTERVAL, filter_trace
from .geometry import CacheGeometry, parse_size
from .graph import (
    CsrGraph,
    DegreeKind,
    Direction,
    degrees,
    gen_graph_trace,
    load_edge_list,
    read_csr,
    skew_metrics,
    synth_powerlaw,
    synth_uniform,
    write_csr,
)
from .grasp import AddressBoundRegister
from .opt import opt_oracle
from .patterns import PatternSpec, generate_pattern
from .registry import POLICY_NAMES, PolicyOptions, run_policy
from .reorder import (
    ReorderKind,
    VertexRemap,
    adjacency_preservation,
    apply_remap,
    family_reorder,
    random_reorder,
    write_remap,
)
from .report import SimReport, format_frame, reports_to_frame, write_frame
from .trace import ReuseHint, Trace, fold_pc, read_trace, write_trace

logger = logging.getLogger(__name__)

PROG = "llc-lab"

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

REORDER_CHOICES = [k.value for k in ReorderKind] + ["rv", "rcb"]


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

class RunConfig(NamedTuple):
    """Everything one simulate / compare / opt run needs."""

    sets: Optional[int] = None
    ways: int = 16
    block: int = 64
    capacity: Optional[str] = None
    policy: str = "lru"
    policies: Optional[str] = None
    baseline: str = "lru"
    trace: Optional[str] = None
    gen: Optional[str] = None
    pc: int = 0
    abr: Optional[list] = None
    filter: Optional[str] = None
    seed: int = 0
    interval: int = DEFAULT_INTERVAL
    jobs: int = 1
    bypass: bool = False
    output: Optional[str] = None
    format: str = "csv"
    epsilon: float = BIMODAL_EPSILON
    leader_sets: int = LEADER_SETS
    psel_bits: int = PSEL_BITS
    rrpv_bits: int = 3
    ldpt_entries: int = LDPT_ENTRIES
    sampler_sets: int = LEEWAY_SAMPLER_SETS
    leeway_interval: int = LEEWAY_SAMPLER_INTERVAL
    leeway_base: str = "lru"
    bop_probability: Optional[float] = None
    rop_probability: Optional[float] = None
    ship_sampler_sets: int = SHIP_SAMPLER_SETS
    pin_base: str = "drrip3"

    @classmethod
    def from_json(cls, path) -> RunConfig:
        return cls(**read_config(path))

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> RunConfig:
        values = vars(args)
        return cls(**{k: values[k] for k in cls._fields if k in values})

    def geometry(self) -> CacheGeometry:
        if self.capacity is not None and self.sets is not None:
            raise ConfigurationError("give either --sets or --capacity, not both")
        if self.capacity is not None:
            return CacheGeometry.from_capacity(self.capacity, self.ways, self.block)
        if self.sets is None:
            raise ConfigurationError("cache geometry needs --sets or --capacity")
        return CacheGeometry(self.sets, self.ways, self.block)

    def abrs(self) -> list[AddressBoundRegister]:
        return [AddressBoundRegister.parse(s) for s in self.abr or ()]

    def policy_names(self) -> list[str]:
        if not self.policies:
            raise ConfigurationError("compare needs --policies")
        names = self.policies if isinstance(self.policies, list) else self.policies.split(",")
        names = [n.strip() for n in names if n.strip()]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate policy in {names}")
        return names

    def options(self) -> PolicyOptions:
        return PolicyOptions(
            epsilon=self.epsilon,
            leader_sets=self.leader_sets,
            psel_bits=self.psel_bits,
            rrpv_bits=self.rrpv_bits,
            ldpt_entries=self.ldpt_entries,
            sampler_sets=self.sampler_sets,
            leeway_interval=self.leeway_interval,
            leeway_base=self.leeway_base,
            bop_probability=self.bop_probability,
            rop_probability=self.rop_probability,
            ship_sampler_sets=self.ship_sampler_sets,
            pin_base=self.pin_base,
        )

    def load_trace(self) -> Trace:
        """The run's trace: read from --trace or generated by --gen, then optionally filtered."""
        if (self.trace is None) == (self.gen is None):
            raise ConfigurationError("give exactly one trace source: --trace or --gen")
        if self.trace is not None:
            trace = read_trace(self.trace)
        else:
            trace = generate_pattern(PatternSpec.parse(self.gen), fold_pc(self.pc), self.block)
        if self.filter:
            trace = filter_trace(trace, _parse_filter(self.filter, self.block))
        return trace


def read_config(path) -> dict:
    """Flat JSON object whose keys are RunConfig fields."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object at top level")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(data) - set(RunConfig._fields))
    if unknown:
        raise ConfigurationError(f"{path}: unknown configuration keys {unknown}")
    return data


PC_HELP = "instruction address of generated records, decimal or 0x-hex; folded to 14 bits by xoring 14-bit slices"


def _pc_arg(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _parse_filter(s: str, block: int) -> CacheGeometry:
    m = re.fullmatch(r"\s*(\d+):(\d+)\s*", s)
    if not m:
        raise ConfigurationError(f"--filter must look like sets:ways, got {s!r}")
    return CacheGeometry(int(m.group(1)), int(m.group(2)), block)


def _parse_fields(s: str, allowed: dict) -> tuple[str, dict]:
    """Split "kind:key=value,..." into its kind and a dict of the allowed keys."""
    kind, _, rest = s.partition(":")
    fields = dict(allowed)
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in fields:
            raise InvalidSpecError(f"unknown field {item!r} in {s!r}")
        fields[key] = value.strip()
    missing = [k for k, v in fields.items() if v is None]
    if missing:
        raise InvalidSpecError(f"{s!r} is missing {', '.join(k + '=' for k in missing)}")
    return kind.strip(), fields


def synth_graph(spec: str, seed: int = 0) -> CsrGraph:
    """
    Build a synthetic graph from a generator string:
      - "powerlaw:v=100000,avg=16,alpha=2.1[,max=N]"
      - "uniform:v=100000,degree=16"
    """
    kind = spec.partition(":")[0].strip()
    try:
        if kind == "powerlaw":
            _, f = _parse_fields(spec, {"v": None, "avg": None, "alpha": None, "max": ""})
            max_degree = int(f["max"]) if f["max"] else None
            return synth_powerlaw(int(f["v"]), float(f["avg"]), float(f["alpha"]), seed, max_degree)
        if kind == "uniform":
            _, f = _parse_fields(spec, {"v": None, "degree": None})
            return synth_uniform(int(f["v"]), int(f["degree"]), seed)
    except ValueError as exc:
        if isinstance(exc, LabError):
            raise
        raise InvalidSpecError(f"non-numeric field in {spec!r}") from None
    raise InvalidSpecError(f"unknown graph generator {kind!r} (expected powerlaw or uniform)")


def load_graph(path, direction: "Direction | str" = Direction.IN) -> CsrGraph:
    """A binary CSR file when it starts with the CSR magic, otherwise a text edge list."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == CSR_MAGIC:
        return read_csr(path, direction)
    return load_edge_list(path, direction)


def reorder_graph(
    graph: CsrGraph,
    kind: str,
    degree_kind: str = "out",
    seed: int = 0,
    granularity: int = 1,
    prop_bytes: int = PROP_BYTES,
    block_bytes: int = 64,
) -> VertexRemap:
    if kind == "rv":
        return random_reorder(graph, 0, seed, prop_bytes, block_bytes)
    if kind == "rcb":
        if granularity < 1:
            raise InvalidSpecError(f"rcb needs --granularity >= 1, got {granularity}")
        return random_reorder(graph, granularity, seed, prop_bytes, block_bytes)
    return family_reorder(graph, kind, degree_kind)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _emit(frame: pd.DataFrame, config: RunConfig) -> None:
    if config.output:
        write_frame(frame, config.output, config.format)
    else:
        sys.stdout.write(format_frame(frame, config.format))


def _run_job(job: tuple) -> SimReport:
    name, trace, geometry, seed, abrs, options, interval = job
    return run_policy(name, trace, geometry, seed, abrs, options, interval)


def cmd_simulate(config: RunConfig) -> pd.DataFrame:
    geometry = config.geometry()
    trace = config.load_trace()
    report = run_policy(
        config.policy, trace, geometry, config.seed, config.abrs(), config.options(), config.interval,
    )
    return reports_to_frame([report])


def cmd_compare(config: RunConfig) -> pd.DataFrame:
    """
    One row per --policies entry, in that order. The baseline is simulated as
    well when it is not among them, but only the requested rows are returned.
    """
    names = config.policy_names()
    geometry = config.geometry()
    trace = config.load_trace()
    abrs = config.abrs()
    runs = names if config.baseline in names else names + [config.baseline]
    jobs = [(n, trace, geometry, config.seed, abrs, config.options(), config.interval) for n in runs]
    if config.jobs > 1:
        logger.info("comparing %d policies on %d worker processes", len(runs), config.jobs)
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            reports = list(pool.map(_run_job, jobs))
    else:
        reports = [_run_job(job) for job in jobs]
    frame = compare(reports, config.baseline)
    return frame[frame["policy"].isin(names)].reset_index(drop=True)


def cmd_opt(config: RunConfig) -> pd.DataFrame:
    geometry = config.geometry()
    trace = config.load_trace()
    return reports_to_frame([opt_oracle(trace, geometry, config.bypass)])


def cmd_gen_trace(args: argparse.Namespace) -> list[AddressBoundRegister]:
    """Write a pattern or graph-kernel trace; returns the ABRs of a graph trace."""
    sources = [s for s in (args.pattern, args.graph, args.synth) if s is not None]
    if len(sources) != 1:
        raise ConfigurationError("give exactly one of --pattern, --graph or --synth")
    if args.pattern is not None:
        trace = generate_pattern(PatternSpec.parse(args.pattern), fold_pc(args.pc), args.block)
        write_trace(trace, args.output)
        return []

    if args.graph is not None:
        graph = load_graph(args.graph, args.direction)
    else:
        graph = synth_graph(args.synth, args.seed)
    wanted = Direction.IN if args.mode == "pull" else Direction.OUT
    if graph.direction is not wanted:
        graph = graph.transpose()
    if args.reorder:
        remap = reorder_graph(
            graph, args.reorder, args.degree_kind, args.seed, args.granularity, args.prop_bytes, args.block,
        )
        graph = apply_remap(graph, remap)
    hint_capacity = parse_size(args.hint_capacity) if args.hint_capacity else None
    trace, abrs = gen_graph_trace(
        graph,
        prop_bytes=args.prop_bytes,
        mode=args.mode,
        block_bytes=args.block,
        iterations=args.iterations,
        dst_array=not args.in_place,
        hint_capacity=hint_capacity,
    )
    write_trace(trace, args.output)
    return abrs


def cmd_reorder(args: argparse.Namespace) -> pd.DataFrame:
    graph = load_graph(args.graph_in, args.direction)
    remap = reorder_graph(
        graph, args.kind, args.degree_kind, args.seed, args.granularity, args.prop_bytes, args.block,
    )
    reordered = apply_remap(graph, remap)
    write_csr(reordered, args.graph_out)
    if args.remap_out:
        write_remap(remap, args.remap_out)
    before = skew_metrics(graph, args.prop_bytes, args.block, args.degree_kind)
    after = skew_metrics(reordered, args.prop_bytes, args.block, args.degree_kind)
    return pd.DataFrame([{
        "kind": args.kind,
        "vertices": graph.num_vertices,
        "avg_hot_per_block_before": before.avg_hot_per_block,
        "avg_hot_per_block_after": after.avg_hot_per_block,
        "hot_footprint_bytes_before": before.hot_footprint_bytes,
        "hot_footprint_bytes_after": after.hot_footprint_bytes,
        "adjacency_preservation": adjacency_preservation(remap),
    }])


def trace_stats(trace: Trace, block_bytes: int = 64) -> pd.DataFrame:
    flags = trace.flags
    hinted = (flags & FLAG_HINT_VALID) != 0
    hints = (flags & HINT_MASK) >> HINT_SHIFT
    row = {
        "records": len(trace),
        "instructions": trace.total_instructions,
        "distinct_blocks": int(np.unique(trace.addresses // block_bytes).size),
        "distinct_pcs": int(np.unique(trace.pcs).size),
        "writes": int(np.count_nonzero(flags & FLAG_WRITE)),
        "hinted": int(np.count_nonzero(hinted)),
    }
    for hint in ReuseHint:
        row[f"hint_{hint.name.lower()}"] = int(np.count_nonzero(hinted & (hints == hint)))
    return pd.DataFrame([row])


def graph_stats(graph: CsrGraph, prop_bytes: int = PROP_BYTES, block_bytes: int = 64,
                degree_kind: str = "out") -> pd.DataFrame:
    d = degrees(graph, degree_kind)
    metrics = skew_metrics(graph, prop_bytes, block_bytes, degree_kind)
    row = {
        "vertices": graph.num_vertices,
        "edges": graph.num_edges,
        "avg_degree": graph.avg_degree,
        "max_degree": int(d.max()) if d.size else 0,
    }
    row.update(metrics._asdict())
    return pd.DataFrame([row])


def cmd_stats(args: argparse.Namespace) -> pd.DataFrame:
    """Summary of a trace (plus its reuse-distance histogram given a geometry) or of a graph."""
    with open(args.path, "rb") as fh:
        head = fh.read(4)
    if head != TRACE_MAGIC:
        graph = load_graph(args.path, args.direction)
        return graph_stats(graph, args.prop_bytes, args.block, args.degree_kind)
    trace = read_trace(args.path)
    if args.sets is None and args.capacity is None:
        return trace_stats(trace, args.block)
    geometry = RunConfig(sets=args.sets, ways=args.ways, block=args.block, capacity=args.capacity).geometry()
    histogram = reuse_distance_distribution(trace, geometry, args.reuse_cap)
    return histogram.to_frame(cumulative=args.cumulative)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_geometry(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("cache geometry")
    g.add_argument("--sets", type=int, help="number of sets (power of two)")
    g.add_argument("--ways", type=int, default=16, help="associativity (default: 16)")
    g.add_argument("--block", type=int, default=64, help="block size in bytes (default: 64)")
    g.add_argument("--capacity", help="total capacity instead of --sets, e.g. 256K or 2M")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output", help="write the table here instead of stdout")


def _add_run(p: argparse.ArgumentParser) -> None:
    _add_geometry(p)
    src = p.add_argument_group("trace source (exactly one)")
    src.add_argument("--trace", help="CTR1 trace file")
    src.add_argument("--gen", help="pattern generator, e.g. thrash:k=32,n=64")
    src.add_argument("--pc", type=_pc_arg, default=0, help=PC_HELP)
    p.add_argument("--filter", help="drop accesses that hit in a sets:ways LRU cache first")
    p.add_argument("--abr", action="append", metavar="START:END",
                   help="Property Array bounds for GRASP and PIN-X (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interval", type=int, default=DEFAULT_INTERVAL,
                   help="accesses between policy interval callbacks")
    p.add_argument("--config", help="flat JSON file of default flag values")
    _add_output(p)

    t = p.add_argument_group("policy tunables")
    t.add_argument("--epsilon", type=float, default=BIMODAL_EPSILON, help="bimodal MRU insertion probability")
    t.add_argument("--leader-sets", type=int, default=LEADER_SETS, help="set-dueling leader sets per side")
    t.add_argument("--psel-bits", type=int, default=PSEL_BITS)
    t.add_argument("--rrpv-bits", type=int, default=3, help="RRPV width for ship-mem")
    t.add_argument("--ldpt-entries", type=int, default=LDPT_ENTRIES)
    t.add_argument("--sampler-sets", type=int, default=LEEWAY_SAMPLER_SETS, help="Leeway sampler sets")
    t.add_argument("--leeway-interval", type=int, default=LEEWAY_SAMPLER_INTERVAL,
                   help="sampler accesses between Leeway duels")
    t.add_argument("--leeway-base", default="lru", help="recency base of static Leeway (lru, nru1..nru4)")
    t.add_argument("--bop-probability", type=float)
    t.add_argument("--rop-probability", type=float)
    t.add_argument("--ship-sampler-sets", type=int, default=SHIP_SAMPLER_SETS)
    t.add_argument("--pin-base", default="drrip3", help="policy PIN-X manages unpinned ways with")


def _add_graph_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--direction", choices=["in", "out"], default="in",
                   help="which neighbour lists the CSR rows hold (default: in)")
    p.add_argument("--degree-kind", choices=[k.value for k in DegreeKind], default="out")
    p.add_argument("--prop-bytes", type=int, default=PROP_BYTES)


def build_parser() -> argparse.ArgumentParser:
    return _build_parsers()[0]


def _build_parsers() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog=PROG, description="Trace-driven last-level cache laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one policy over a trace")
    p.add_argument("--policy", default="lru", help=f"one of: {', '.join(POLICY_NAMES)}")
    _add_run(p)

    p = sub.add_parser("compare", help="run several policies over one trace")
    p.add_argument("--policies", help="comma-separated policy names")
    p.add_argument("--baseline", default="lru", help="policy the miss reduction is measured against")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_run(p)

    p = sub.add_parser("opt", help="Belady's offline optimum")
    p.add_argument("--bypass", action="store_true", help="let the oracle decline insertions")
    _add_run(p)

    p = sub.add_parser("gen-trace", help="write a pattern or graph-kernel trace")
    p.add_argument("output", help="CTR1 file to write")
    p.add_argument("--pattern", help="e.g. recency:k=8,n=4")
    p.add_argument("--pc", type=_pc_arg, default=0, help=PC_HELP)
    p.add_argument("--graph", help="edge list or CSR file")
    p.add_argument("--synth", help="powerlaw:v=..,avg=..,alpha=.. or uniform:v=..,degree=..")
    p.add_argument("--mode", choices=["pull", "push"], default="pull")
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--in-place", action="store_true", help="write results into the source property array")
    p.add_argument("--reorder", choices=REORDER_CHOICES, help="reorder vertices before tracing")
    p.add_argument("--granularity", type=int, default=1, help="blocks per shuffled run for rcb")
    p.add_argument("--hint-capacity", help="LLC size to annotate GRASP hints for, e.g. 256K")
    p.add_argument("--block", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    _add_graph_input(p)

    p = sub.add_parser("reorder", help="relabel a graph's vertices")
    p.add_argument("graph_in")
    p.add_argument("graph_out", help="CSR file to write")
    p.add_argument("remap_out", nargs="?", help="vertex remap file to write")
    p.add_argument("--kind", choices=REORDER_CHOICES, default="dbg")
    p.add_argument("--granularity", type=int, default=1, help="blocks per shuffled run for rcb")
    p.add_argument("--block", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    _add_graph_input(p)
    _add_output(p)

    p = sub.add_parser("stats", help="summarize a trace or a graph")
    p.add_argument("path", help="CTR1 trace, CSR file or edge list")
    _add_geometry(p)
    p.add_argument("--reuse-cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--cumulative", action="store_true")
    _add_graph_input(p)
    _add_output(p)
    return parser, sub.choices


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser, subparsers = _build_parsers()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        if getattr(args, "config", None):
            # file values become defaults, so explicit flags still win
            subparsers[args.command].set_defaults(**read_config(args.config))
            args = parser.parse_args(argv)

        if args.command in ("simulate", "compare", "opt"):
            config = RunConfig.from_namespace(args)
            command = {"simulate": cmd_simulate, "compare": cmd_compare, "opt": cmd_opt}[args.command]
            _emit(command(config), config)
        elif args.command == "gen-trace":
            for abr in cmd_gen_trace(args):
                print(f"{abr.start:#x}:{abr.end:#x}")
        elif args.command == "reorder":
            _emit(cmd_reorder(args), RunConfig(output=args.output, format=args.format))
        else:
            _emit(cmd_stats(args), RunConfig(output=args.output, format=args.format))
    except (LabError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    return 0
