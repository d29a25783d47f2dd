"""Policy construction by name, as used on the command line."""
from __future__ import annotations

import logging
import re
from typing import NamedTuple, Optional, Sequence

from ._data import (
    BIMODAL_EPSILON,
    LDPT_ENTRIES,
    LEADER_SETS,
    LEEWAY_SAMPLER_INTERVAL,
    LEEWAY_SAMPLER_SETS,
    PSEL_BITS,
    SHIP_SAMPLER_SETS,
)
from ._errors import ConfigurationError
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
from .engine import DEFAULT_INTERVAL, ReplacementPolicy, simulate
from .geometry import CacheGeometry
from .grasp import AddressBoundRegister, GraspPolicy, GraspVariant, RegionMap, check_hint_sources
from .leeway import leeway_policy
from .opt import BeladyPolicy
from .pin import pin_policy
from .report import SimReport
from .ship import ship_mem_policy
from .trace import Trace

logger = logging.getLogger(__name__)

POLICY_NAMES = (
    ["lru", "lip", "bip", "dip"]
    + [f"nru{k}" for k in range(1, 5)]
    + [f"{p}{m}" for p in ("srrip", "brrip", "drrip") for m in (2, 3)]
    + ["ship-mem"]
    + [f"pin{x}" for x in (25, 50, 75, 100)]
    + ["random", "opt", "opt-bypass"]
    + ["leeway-lru"] + [f"leeway-nru{k}" for k in range(1, 5)]
    + ["leeway-static-bop", "leeway-static-rop", "leeway-static-vtt7"]
    + ["grasp", "grasp-hints", "grasp-insert"]
)


class PolicyOptions(NamedTuple):
    """Tunables shared by the policy constructors; each policy reads the ones it has."""

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


def make_policy(
    name: str,
    trace: Optional[Trace] = None,
    region_map: Optional[RegionMap] = None,
    options: PolicyOptions = PolicyOptions(),
) -> ReplacementPolicy:
    """
    Fresh policy instance for `name`. OPT needs the trace it will run on;
    GRASP and PIN-X classify addresses with `region_map` when given.
    """
    o = options
    duel = dict(leaders=o.leader_sets, psel_bits=o.psel_bits)
    if name == "lru":
        return LruPolicy()
    if name == "lip":
        return LipPolicy()
    if name == "bip":
        return BipPolicy(o.epsilon)
    if name == "dip":
        return DipPolicy(o.epsilon, **duel)
    if name == "random":
        return RandomPolicy()
    if name == "ship-mem":
        return ship_mem_policy(o.rrpv_bits, sampler_sets=o.ship_sampler_sets)
    if name in ("opt", "opt-bypass"):
        if trace is None:
            raise ConfigurationError(f"{name} needs the whole trace up front")
        return BeladyPolicy(trace, allow_bypass=name == "opt-bypass")
    if name in ("grasp", "grasp-hints", "grasp-insert"):
        variant = {"grasp": GraspVariant.FULL, "grasp-hints": GraspVariant.RRIP_PLUS_HINTS,
                   "grasp-insert": GraspVariant.INSERTION_ONLY}[name]
        return GraspPolicy(region_map, variant, epsilon=o.epsilon, **duel)

    m = re.fullmatch(r"nru([1-4])", name)
    if m:
        return NruPolicy(int(m.group(1)))
    m = re.fullmatch(r"(srrip|brrip|drrip)([23])", name)
    if m:
        bits = int(m.group(2))
        if m.group(1) == "srrip":
            return SrripPolicy(bits)
        if m.group(1) == "brrip":
            return BrripPolicy(bits, o.epsilon)
        return DrripPolicy(bits, o.epsilon, **duel)
    m = re.fullmatch(r"pin(25|50|75|100)", name)
    if m:
        if o.pin_base.startswith("pin"):
            raise ConfigurationError("PIN-X cannot use another PIN-X as its base")
        base = make_policy(o.pin_base, trace, region_map, options)
        return pin_policy(int(m.group(1)), base, region_map)
    m = re.fullmatch(r"leeway-(lru|nru[1-4]|static-bop|static-rop|static-vtt7)", name)
    if m:
        kind = m.group(1)
        if kind.startswith("static-"):
            mode, base = kind, o.leeway_base
        else:
            mode, base = "dynamic", kind
        return leeway_policy(
            mode,
            base,
            ldpt_entries=o.ldpt_entries,
            sampler_sets=o.sampler_sets,
            interval=o.leeway_interval,
            bop_probability=o.bop_probability,
            rop_probability=o.rop_probability,
        )
    raise ConfigurationError(f"unknown policy {name!r}; known policies: {', '.join(POLICY_NAMES)}")


def run_policy(
    name: str,
    trace: Trace,
    geometry: CacheGeometry,
    seed: int = 0,
    abrs: Sequence[AddressBoundRegister] = (),
    options: PolicyOptions = PolicyOptions(),
    interval: int = DEFAULT_INTERVAL,
    reuse_cap: Optional[int] = None,
) -> SimReport:
    """Build `name` for (trace, geometry, ABRs) and simulate it."""
    region_map = RegionMap.for_geometry(abrs, geometry) if abrs else None
    check_hint_sources(trace, region_map)
    policy = make_policy(name, trace, region_map, options)
    return simulate(trace, geometry, policy, seed, interval, reuse_cap)
