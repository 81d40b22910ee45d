"""Edmonds–Karp maximum flow over an integer-capacity digraph."""

from __future__ import annotations

from collections import defaultdict, deque
from typing import Hashable


class FlowNetwork:
    """Residual-capacity graph; parallel edges are merged by summing capacity."""

    def __init__(self):
        self.residual: dict[Hashable, dict[Hashable, int]] = defaultdict(dict)

    def add_edge(self, u: Hashable, v: Hashable, capacity: int) -> None:
        if u == v:
            raise ValueError("self-loops are not allowed")
        self.residual[u][v] = self.residual[u].get(v, 0) + capacity
        self.residual[v].setdefault(u, 0)

    def _augmenting_path(self, s, t):
        parent = {s: None}
        todo = deque([s])
        while todo:
            u = todo.popleft()
            for v, c in self.residual[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    if v == t:
                        return parent
                    todo.append(v)
        return None

    def max_flow(self, s: Hashable, t: Hashable) -> int:
        """Saturate shortest augmenting paths until none is left."""
        if s not in self.residual or t not in self.residual:
            return 0
        total = 0
        while True:
            parent = self._augmenting_path(s, t)
            if parent is None:
                return total
            push = None
            v = t
            while parent[v] is not None:
                u = parent[v]
                c = self.residual[u][v]
                push = c if push is None else min(push, c)
                v = u
            v = t
            while parent[v] is not None:
                u = parent[v]
                self.residual[u][v] -= push
                self.residual[v][u] += push
                v = u
            total += push

    def source_side(self, s: Hashable) -> set:
        """Vertices reachable from ``s`` in the residual graph (call after max_flow)."""
        seen = {s}
        todo = deque([s])
        while todo:
            u = todo.popleft()
            for v, c in self.residual[u].items():
                if c > 0 and v not in seen:
                    seen.add(v)
                    todo.append(v)
        return seen
