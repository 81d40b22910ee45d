"""Aggregated deletion propagation for self-join-free conjunctive queries.

Decide whether removing at least k query results with the fewest input
deletions is poly-time for a query, and solve instances: exactly when it
is, heuristically when it is not.
"""

from .dichotomy import Classification, classify, is_ptime
from .engine import Instance, count_results, evaluate, instance_from_rows, load_instance
from .errors import (
    AdpError,
    CapExceededError,
    DataError,
    InfeasibleError,
    InternalInconsistency,
    KOutOfRangeError,
    ParseError,
    QueryError,
)
from .query import Query, Relation, Selection, hard_structure, make_query
from .solver import AdpResult, compute_adp
from .text import parse_query, render_query

__all__ = [
    "AdpError", "AdpResult", "CapExceededError", "Classification", "DataError",
    "InfeasibleError", "Instance", "InternalInconsistency", "KOutOfRangeError", "ParseError",
    "Query", "QueryError", "Relation", "Selection", "classify", "compute_adp", "count_results",
    "evaluate", "hard_structure", "instance_from_rows", "is_ptime", "load_instance",
    "make_query", "parse_query", "render_query",
]
