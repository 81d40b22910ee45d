"""Queries with a pivot relation contained in every other relation."""

from __future__ import annotations

from collections import Counter, defaultdict

import numpy as np

from ..engine import Instance, _join, projector
from ..errors import InternalInconsistency
from ..query import Query
from .base import TableSolution, curve_from_steps


def singleton_solution(q: Query, d: Instance, pivot: int, limit: int) -> TableSolution:
    rel = q.rel(pivot)
    rows = _join(q, d)
    to_pivot = projector(q.attrs, rel.attrs)
    if rel.attrset <= q.headset:
        # removing pivot tuple t kills exactly the outputs that agree with t
        outputs = set(map(projector(q.attrs, q.head), rows))
        per = Counter(map(projector(q.head, rel.attrs), outputs))
        ranked = sorted(per.items(), key=lambda kv: (-kv[1], kv[0]))
        costs, removed = curve_from_steps([p for _, p in ranked], limit)
        return TableSolution("singleton", costs, removed,
                             lambda m: [(pivot, t) for t, _ in ranked[:costs[m]]])
    # head within the pivot: each output owns a disjoint set of pivot tuples
    to_out = projector(rel.attrs, q.head)
    groups = defaultdict(set)
    live = set(map(to_pivot, rows))
    for t in live:
        groups[to_out(t)].add(t)
    if sum(len(g) for g in groups.values()) != len(live):
        raise InternalInconsistency("pivot tuples shared between outputs", query=str(q))
    ranked = sorted(groups.items(), key=lambda kv: (len(kv[1]), kv[0]))[:limit]
    sizes = np.array([len(g) for _, g in ranked], dtype=np.int64)
    costs = np.concatenate(([0], np.cumsum(sizes)))
    removed = np.arange(len(ranked) + 1)

    def pick(m):
        return [(pivot, t) for _, g in ranked[:m] for t in sorted(g)]

    return TableSolution("singleton", costs, removed, pick)
