"""Dynamic programs that combine the cost curves of independent parts.

Groups: the instance splits by the values of attributes shared by every
relation, so outputs of different groups are disjoint and their removal
counts add up. Components: the outputs are a cross product, so removing
k1 of m1 and k2 of m2 outputs removes k1*m2 + k2*m1 - k1*k2.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..engine import Removal
from .base import INF, Solution


class GroupSum(Solution):
    """Cheapest split of a removal budget across disjoint output groups."""

    stage = "universe"

    def __init__(self, parts: Sequence[Solution], lift: Sequence, limit: int, keep_choices: bool):
        super().__init__(limit)
        self.parts = parts
        self.lift = lift
        cost = np.full(limit + 1, INF, dtype=np.int64)
        rem = np.zeros(limit + 1, dtype=np.int64)
        cost[0] = 0
        self.choices = [] if keep_choices else None
        reach = 0
        for part in parts:
            c, r = part.curve()
            top = min(limit, reach + part.limit)
            new_cost = np.full(limit + 1, INF, dtype=np.int64)
            new_rem = np.zeros(limit + 1, dtype=np.int64)
            choice = np.zeros(limit + 1, dtype=np.int32)
            for m in range(min(part.limit, top) + 1):
                span = top - m + 1
                cand = cost[:span] + c[m]
                better = cand < new_cost[m:top + 1]
                new_cost[m:top + 1][better] = cand[better]
                new_rem[m:top + 1][better] = rem[:span][better] + r[m]
                choice[m:top + 1][better] = m
            cost, rem, reach = new_cost, new_rem, top
            if keep_choices:
                self.choices.append(choice)
        self.cost, self.rem = cost, rem

    def curve(self):
        return self.cost, self.rem

    def removals(self, m: int) -> list[Removal]:
        if self.choices is None:
            raise RuntimeError("removals requested from a count-only table")
        out = []
        for part, lift, choice in zip(reversed(self.parts), reversed(self.lift),
                                      reversed(self.choices)):
            take = int(choice[m])
            out.extend(lift(x) for x in part.removals(take))
            m -= take
        return sorted(out)


class Product(Solution):
    """Two independent factors with m1 and m2 outputs each."""

    stage = "decompose"

    def __init__(self, left: Solution, right: Solution, m1: int, m2: int, limit: int):
        super().__init__(limit)
        self.left, self.right = left, right
        self.m1, self.m2 = m1, m2
        self._curve = None
        self._cells: dict[int, tuple] = {}

    def _best(self, j: int):
        if j in self._cells:
            return self._cells[j]
        c1, r1 = self.left.curve()
        c2, r2 = self.right.curve()
        k1 = np.arange(min(j, self.left.limit) + 1, dtype=np.int64)
        need = j - k1 * self.m2
        # smallest k2 meeting k1*m2 + k2*m1 - k1*k2 >= j; curves are monotone
        k2 = np.where(need <= 0, 0, -(-need // np.maximum(self.m1 - k1, 1)))
        ok = k2 <= min(j, self.right.limit)
        k1, k2 = k1[ok], k2[ok]
        total = c1[k1] + c2[k2]
        i = int(np.argmin(total))
        a, b = int(k1[i]), int(k2[i])
        gone = self.m1 * self.m2 - (self.m1 - int(r1[a])) * (self.m2 - int(r2[b]))
        cell = (int(total[i]), gone, a, b)
        self._cells[j] = cell
        return cell

    def at(self, m):
        cost, gone, _, _ = self._best(m)
        return cost, gone

    def curve(self):
        if self._curve is None:
            cells = [self._best(j) for j in range(self.limit + 1)]
            self._curve = (np.array([c[0] for c in cells], dtype=np.int64),
                           np.array([c[1] for c in cells], dtype=np.int64))
        return self._curve

    def removals(self, m):
        _, _, a, b = self._best(m)
        return sorted(self.left.removals(a) + self.right.removals(b))
