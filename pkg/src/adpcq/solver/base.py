"""Shared solver plumbing: cost curves, the per-solve context and results.

Every sub-solver produces a :class:`Solution`, a *cost curve*: for each
m in ``0..limit`` the cheapest removal found that deletes at least m
outputs. Exact stages produce the optimum for every m at once, which is
what the combining dynamic programs consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..engine import Removal, removal_to_json
from ..query import Query

INF = 2 ** 60

EXACT_STAGES = frozenset({"selection", "boolean", "singleton", "universe", "decompose"})
HEURISTIC_STAGES = frozenset({"greedy", "drastic"})


class Solution:
    """Cost curve over m = 0..limit, with removed-output counts."""

    stage = "none"

    def __init__(self, limit: int):
        self.limit = limit

    def at(self, m: int) -> tuple[int, int]:
        costs, removed = self.curve()
        return int(costs[m]), int(removed[m])

    def curve(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def removals(self, m: int) -> list[Removal]:
        raise NotImplementedError


class TableSolution(Solution):
    def __init__(self, stage: str, costs, removed, pick: Callable[[int], list[Removal]]):
        super().__init__(len(costs) - 1)
        self.stage = stage
        self.costs = np.asarray(costs, dtype=np.int64)
        self.removed = np.asarray(removed, dtype=np.int64)
        self._pick = pick

    def curve(self):
        return self.costs, self.removed

    def removals(self, m):
        if m == 0:
            return []
        return self._pick(m)


def empty_solution() -> TableSolution:
    return TableSolution("none", [0], [0], lambda m: [])


def curve_from_steps(gains: list[int], limit: int) -> tuple[np.ndarray, np.ndarray]:
    """Cost curve of a fixed removal sequence: cost(m) = shortest prefix reaching m."""
    cum = np.cumsum(np.asarray(gains, dtype=np.int64))
    ms = np.arange(1, limit + 1)
    idx = np.searchsorted(cum, ms, side="left")
    if len(idx) and idx[-1] >= len(cum):
        raise ValueError("removal sequence does not reach the requested count")
    costs = np.concatenate(([0], idx + 1))
    removed = np.concatenate(([0], cum[idx]))
    return costs.astype(np.int64), removed.astype(np.int64)


@dataclass
class Context:
    heuristic: str = "auto"
    report: bool = False
    memo: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)
    greedy_fallbacks: int = 0
    warnings: list = field(default_factory=list)

    def enter(self, stage: str) -> None:
        if stage not in self.stages:
            self.stages.append(stage)

    @property
    def heuristic_used(self) -> bool:
        return any(s in HEURISTIC_STAGES for s in self.stages)


@dataclass(frozen=True)
class AdpResult:
    cost: int
    removed_outputs: int
    exact: bool
    path: tuple[str, ...]
    removals: Optional[tuple[Removal, ...]] = None
    metadata: dict = field(default_factory=dict, compare=False)


def result_to_json(q: Query, res: AdpResult) -> dict:
    out = {
        "cost": res.cost,
        "removed_outputs": res.removed_outputs,
        "exact": res.exact,
        "path": list(res.path),
    }
    if res.removals is not None:
        out["removals"] = [removal_to_json(q, r) for r in res.removals]
    return out
