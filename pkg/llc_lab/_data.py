"""
Static data: file-format constants, policy defaults and the GRASP / DBG tables.
"""

# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

TRACE_MAGIC = b"CTR1"
TRACE_VERSION = 1
TRACE_HEADER_BYTES = 16
TRACE_RECORD_BYTES = 16

CSR_MAGIC = b"CSR1"

PC_BITS = 14
PC_MASK = (1 << PC_BITS) - 1

# flags byte of a trace record
FLAG_WRITE = 0x01
FLAG_HINT_VALID = 0x02
HINT_SHIFT = 2
HINT_MASK = 0x0C

# ---------------------------------------------------------------------------
# Policy defaults
# ---------------------------------------------------------------------------

BIMODAL_EPSILON = 1 / 32
LEADER_SETS = 32
PSEL_BITS = 10

SHIP_REGION_BYTES = 16 * 1024
SHIP_COUNTER_MAX = 7
SHIP_COUNTER_INIT = 1
SHIP_SAMPLER_SETS = 64

PIN_PERCENTAGES = (25, 50, 75, 100)

LDPT_ENTRIES = 16 * 1024
LEEWAY_SAMPLER_SETS = 64
LEEWAY_SAMPLER_INTERVAL = 100_000
LEEWAY_INSTRUCTION_INTERVAL = 200_000_000
VTT_MAX = 7

# bank name -> (vtt_increase, vtt_decrease, sampler insertion probability at stable 0)
LEEWAY_BANKS: dict[str, tuple[int, int, float]] = {
    "bop":  (7, 1, 0.01),
    "rop":  (1, 7, 0.03),
    "vtt7": (7, 7, 0.01),
}

# ---------------------------------------------------------------------------
# GRASP: per-hint RRPV updates for a 3-bit counter (0..7).
#   insert: RRPV value on fill, or None to defer to DRRIP
#   hit:    "zero" resets to 0, "dec" decrements towards 0
# ---------------------------------------------------------------------------

GRASP_RRPV_BITS = 3

GRASP_TABLE: dict[str, dict[str, object]] = {
    "high":     {"insert": 0,    "hit": "zero"},
    "moderate": {"insert": 6,    "hit": "dec"},
    "low":      {"insert": 7,    "hit": "dec"},
    "default":  {"insert": None, "hit": "zero"},
}

GRASP_MAX_ARRAYS = 2

# ---------------------------------------------------------------------------
# Graph traces
# ---------------------------------------------------------------------------

PROP_BYTES = 8
VERTEX_ELEMENT_BYTES = 8
EDGE_ELEMENT_BYTES = 4
GRAPH_PROP_BASE = 0x1000_0000

# PC signatures used by the graph trace generator, one per array kind
GRAPH_PCS: dict[str, int] = {
    "vertex":     0x0101,
    "edge":       0x0202,
    "prop_read":  0x0303,
    "prop_write": 0x0404,
}

# DBG's default geometric ranges as multiples of the average degree, hottest first.
# None stands for an open upper bound.
DBG_RANGES: list[tuple[float, "float | None"]] = [
    (32.0, None),
    (16.0, 32.0),
    (8.0, 16.0),
    (4.0, 8.0),
    (2.0, 4.0),
    (1.0, 2.0),
    (0.5, 1.0),
    (0.0, 0.5),
]
