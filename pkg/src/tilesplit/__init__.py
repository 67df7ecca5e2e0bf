"""Multiscale substitution schemes: Kakutani and generation partitions."""

from .engine import PartitionState, Snapshot, Trace, generation_step, init, kakutani_step, marking_points, run
from .errors import TilesplitError
from .graph import AssocGraph, build_graph, commensurability
from .rationalize import RationalizationResult, rationalize, verify_subsequence
from .scalar import Scalar
from .scheme import Scheme, load_scheme, load_scheme_file, normalize_scheme, validate_scheme

__all__ = [
    "AssocGraph",
    "PartitionState",
    "RationalizationResult",
    "Scalar",
    "Scheme",
    "Snapshot",
    "TilesplitError",
    "Trace",
    "build_graph",
    "commensurability",
    "generation_step",
    "init",
    "kakutani_step",
    "load_scheme",
    "load_scheme_file",
    "marking_points",
    "normalize_scheme",
    "rationalize",
    "run",
    "validate_scheme",
    "verify_subsequence",
]
__version__ = "0.1.0"
