"""Exact and heuristic solvers for aggregated deletion propagation."""

from .base import AdpResult, result_to_json
from .boolean import linearize, min_cut
from .dispatch import (
    HEURISTICS,
    MODES,
    compute_adp,
    drastic_greedy_full,
    greedy_for_cq,
    solve_boolean,
    solve_decompose,
    solve_singleton,
    solve_universe,
)
from .flow import FlowNetwork

__all__ = [
    "AdpResult", "FlowNetwork", "HEURISTICS", "MODES", "compute_adp", "drastic_greedy_full",
    "greedy_for_cq", "linearize", "min_cut", "result_to_json", "solve_boolean",
    "solve_decompose", "solve_singleton", "solve_universe",
]
