"""Greedy heuristics for queries without an exact algorithm.

Only tuples of endogenous relations are ever removed: any solution can be
rewritten to use them without getting more expensive.
"""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict

import numpy as np

from ..engine import Instance, _join, projector
from ..errors import InfeasibleError
from ..query import Query, endogenous_relations
from .base import INF, TableSolution, curve_from_steps


def _incidence(q: Query, d: Instance):
    """Join rows, the output id of each row and, per endogenous tuple, its rows."""
    rows = _join(q, d)
    to_head = projector(q.attrs, q.head)
    ids: dict = {}
    row_out = [ids.setdefault(to_head(r), len(ids)) for r in rows]
    touch: dict[tuple, list] = {}
    for rid in endogenous_relations(q):
        proj = projector(q.attrs, q.rel(rid).attrs)
        by_t = defaultdict(list)
        for i, r in enumerate(rows):
            by_t[proj(r)].append(i)
        for t in sorted(by_t):
            touch[(rid, t)] = by_t[t]
    return row_out, len(ids), touch


def greedy_sequence(q: Query, d: Instance, k: int) -> tuple[list, list, int]:
    """Greedy picks until at least ``k`` outputs are gone.

    Returns (picks, gains, fallbacks). A fallback happens when no tuple has
    positive profit yet outputs must still go: the tuple on the most
    surviving witnesses is removed so that progress is guaranteed.
    """
    row_out, n_out, touch = _incidence(q, d)
    order = list(touch)  # relation id, then tuple order
    alive = bytearray(b"\x01") * len(row_out)
    left = Counter(row_out)
    full = q.is_full
    picks, gains, fallbacks = [], [], 0
    removed = 0

    def gain(key):
        if full:
            return sum(alive[i] for i in touch[key])
        mine = Counter(row_out[i] for i in touch[key] if alive[i])
        return sum(1 for o, c in mine.items() if c == left[o])

    def take(key):
        for i in touch[key]:
            if alive[i]:
                alive[i] = 0
                left[row_out[i]] -= 1

    heap = [(-len(touch[key]), pos) for pos, key in enumerate(order)] if full else None
    if heap is not None:
        heapq.heapify(heap)
    done = set()
    while removed < k:
        best = None
        if full:
            # profits only shrink on full queries, so stale heap keys are upper bounds
            while heap:
                neg, pos = heapq.heappop(heap)
                g = gain(order[pos])
                if g == -neg:
                    best, best_gain = pos, g
                    break
                if g > 0:
                    heapq.heappush(heap, (-g, pos))
        else:
            best_gain = 0
            for pos, key in enumerate(order):
                if pos in done:
                    continue
                g = gain(key)
                if g > best_gain:
                    best, best_gain = pos, g
        if best is None or best_gain == 0:
            # the tuple on the most surviving witnesses, ties by order
            hits = [(sum(alive[i] for i in touch[key]), -pos) for pos, key in enumerate(order)]
            top, neg = max(hits) if hits else (0, 0)
            best = -neg if top else None
            if best is None:
                raise InfeasibleError("no tuple left on a surviving output")
            best_gain = gain(order[best])
            fallbacks += 1
        take(order[best])
        done.add(best)
        picks.append(order[best])
        gains.append(best_gain)
        removed += best_gain
    return picks, gains, fallbacks


def greedy_solution(q: Query, d: Instance, limit: int) -> tuple[TableSolution, int]:
    picks, gains, fallbacks = greedy_sequence(q, d, limit)
    costs, removed = curve_from_steps(gains, limit)
    return TableSolution("greedy", costs, removed, lambda m: sorted(picks[:costs[m]])), fallbacks


def drastic_solution(q: Query, d: Instance, limit: int) -> TableSolution:
    """Best prefix of a single endogenous relation, per target count."""
    if not q.is_full:
        raise InfeasibleError("the single-relation heuristic needs a full query")
    rows = _join(q, d)
    costs = np.full(limit + 1, INF, dtype=np.int64)
    removed = np.zeros(limit + 1, dtype=np.int64)
    owner = np.full(limit + 1, -1, dtype=np.int64)
    costs[0] = 0
    ranked_by = {}
    for rid in endogenous_relations(q):
        # tuples of one relation remove disjoint rows of the full join
        per = Counter(map(projector(q.attrs, q.rel(rid).attrs), rows))
        ranked = sorted(per.items(), key=lambda kv: (-kv[1], kv[0]))
        ranked_by[rid] = ranked
        cum = np.cumsum([p for _, p in ranked], dtype=np.int64)
        ms = np.arange(1, limit + 1)
        idx = np.searchsorted(cum, ms, side="left")
        ok = idx < len(cum)
        c = np.where(ok, idx + 1, INF)
        # ties go to the later relation in body order
        better = np.concatenate(([False], c <= costs[1:]))
        costs[better] = c[better[1:]]
        removed[better] = cum[np.minimum(idx, len(cum) - 1)][better[1:]]
        owner[better] = rid
    if limit and costs[limit] >= INF:
        raise InfeasibleError(f"no single relation can remove {limit} outputs")

    def pick(m):
        return sorted((int(owner[m]), t) for t, _ in ranked_by[int(owner[m])][:costs[m]])

    return TableSolution("drastic", costs, removed, pick)
