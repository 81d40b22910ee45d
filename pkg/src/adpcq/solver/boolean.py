"""Minimum cut for triad-free boolean queries.

The relations are arranged in a chain in which every attribute occupies a
contiguous run. Each endogenous tuple becomes a unit edge between
consecutive layers; exogenous tuples become uncuttable edges. When no chain
exists over the original attribute sets, exogenous relations are widened
with extra attributes drawn from the full join; this keeps the set of
witnesses intact and, since their edges cannot be cut, the optimum too.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from ..engine import Instance, _join, projector
from ..errors import InternalInconsistency
from ..query import Query, endogenous_relations
from .base import TableSolution
from .flow import FlowNetwork

# widening search gives up beyond this many candidate assignments
SEARCH_BUDGET = 200_000


def _chain_order(sets: dict[int, frozenset]) -> Optional[tuple[int, ...]]:
    """Order ids so that each attribute's occurrences are consecutive, or None."""
    ids = sorted(sets)

    def extend(order, closed, last):
        if len(order) == len(ids):
            return tuple(order)
        for rid in ids:
            if rid in order:
                continue
            cur = sets[rid]
            if cur & closed:
                continue
            order.append(rid)
            found = extend(order, closed | (last - cur), cur)
            order.pop()
            if found:
                return found
        return None

    return extend([], frozenset(), frozenset())


@dataclass(frozen=True)
class Chain:
    order: tuple[int, ...]
    attrs: dict  # rid -> attributes the relation carries in the chain
    endogenous: frozenset


def _subsets(pool):
    pool = sorted(pool)
    for n in range(len(pool) + 1):
        for c in itertools.combinations(pool, n):
            yield c


@lru_cache(maxsize=512)
def linearize(q: Query) -> Chain:
    """Find a chain over all relations, widening exogenous ones if needed."""
    endo = frozenset(endogenous_relations(q))
    exo = [r for r in q.body if r.id not in endo]
    every = frozenset(q.attrs)
    options = [list(_subsets(every - r.attrset)) for r in exo]
    most = sum(len(every - r.attrset) for r in exo)
    tried = 0
    for total in range(most + 1):
        for combo in itertools.product(*options):
            if sum(map(len, combo)) != total:
                continue
            tried += 1
            if tried > SEARCH_BUDGET:
                raise InternalInconsistency("no chain order found within budget", query=str(q))
            attrs = {r.id: r.attrs for r in q.body}
            for r, extra in zip(exo, combo):
                attrs[r.id] = r.attrs + tuple(extra)
            order = _chain_order({rid: frozenset(a) for rid, a in attrs.items()})
            if order is not None:
                return Chain(order, attrs, endo)
    raise InternalInconsistency("no chain order exists for a triad-free query", query=str(q))


def min_cut(q: Query, d: Instance) -> tuple[int, list]:
    """Resilience of a true boolean query: (cost, endogenous tuples to delete)."""
    chain = linearize(q)
    rows = _join(q, d)
    if not rows:
        return 0, []
    n = len(chain.order)
    sets = [frozenset(chain.attrs[rid]) for rid in chain.order]
    links = [tuple(a for a in q.attrs if a in sets[i] & sets[i + 1]) for i in range(n - 1)]
    # finite capacities are unit; anything at least their total is uncuttable
    big = sum(len(d[rid]) for rid in chain.endogenous) + 1
    net = FlowNetwork()
    edges: dict[tuple, list] = {}
    for i, rid in enumerate(chain.order):
        rattrs = chain.attrs[rid]
        tuples = sorted(set(map(projector(q.attrs, rattrs), rows)))
        cap = 1 if rid in chain.endogenous else big
        left = projector(rattrs, links[i - 1]) if i > 0 else None
        right = projector(rattrs, links[i]) if i < n - 1 else None
        for t in tuples:
            u = (i - 1, left(t)) if left else "source"
            v = (i, right(t)) if right else "sink"
            net.add_edge(u, v, cap)
            if cap == 1:
                edges.setdefault((u, v), []).append((rid, t))
    flow = net.max_flow("source", "sink")
    side = net.source_side("source")
    cut = [x for (u, v), ts in edges.items() if u in side and v not in side for x in ts]
    if flow >= big or len(cut) != flow:
        raise InternalInconsistency("cut does not match flow value", flow=flow, cut=cut)
    return flow, sorted(cut)


def boolean_solution(q: Query, d: Instance) -> TableSolution:
    cost, cut = min_cut(q, d)
    if cost == 0:
        return TableSolution("boolean", [0], [0], lambda m: [])
    return TableSolution("boolean", [0, cost], [0, 1], lambda m: list(cut))
