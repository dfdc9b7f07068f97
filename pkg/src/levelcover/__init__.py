"""Dynamic weighted set cover with a bounded approximation guarantee.

The engine maintains a cover of live elements under insertions and
deletions, spending only logarithmically many weight adjustments per update
on average, and never letting the cover cost drift beyond a fixed factor of
the optimum.  Exact-rational verification oracles and a stream CLI live
alongside it.
"""

from .engine import DynamicCover, LogEntry
from .model import (
    EXACT_RATIONAL,
    FAST_FLOAT,
    ConfigError,
    CoverDiff,
    Instance,
    SetCoverError,
    Snapshot,
    SystemConfig,
    UpdateError,
    new_system,
)
from .rebuild import FixLevelCase, fix_level, rebuild, target_level
from .statics import StaticPartition, check_partition, static_build
from .streams import (
    StreamEvent,
    StreamHeader,
    StreamParseError,
    gen,
    gen_events,
    parse_stream,
    render_stream,
)
from .verifier import (
    VerifierReport,
    brute_force_opt,
    certify_ratio,
    check_invariants,
    reference_fix_level,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CoverDiff",
    "DynamicCover",
    "EXACT_RATIONAL",
    "FAST_FLOAT",
    "FixLevelCase",
    "Instance",
    "LogEntry",
    "SetCoverError",
    "Snapshot",
    "StaticPartition",
    "StreamEvent",
    "StreamHeader",
    "StreamParseError",
    "SystemConfig",
    "UpdateError",
    "VerifierReport",
    "brute_force_opt",
    "certify_ratio",
    "check_invariants",
    "check_partition",
    "fix_level",
    "gen",
    "gen_events",
    "new_system",
    "parse_stream",
    "rebuild",
    "reference_fix_level",
    "render_stream",
    "static_build",
    "target_level",
]
