"""Top-level dispatch and the public entry points of every stage."""

from __future__ import annotations

import logging

import numpy as np

from ..dichotomy import classify
from ..engine import (
    Instance,
    apply_selection,
    count_results,
    delta_count,
    lift_removals,
    partition_by,
)
from ..errors import InfeasibleError, InternalInconsistency, KOutOfRangeError, QueryError
from ..query import (
    Query,
    connected_components,
    find_triad_like,
    is_connected,
    remove_attributes,
    singleton_pivot,
    universal_attributes,
    vacuum_relations,
)
from .base import INF, AdpResult, Context, Solution, TableSolution, empty_solution
from .boolean import boolean_solution
from .combine import GroupSum, Product
from .greedy import drastic_solution, greedy_solution
from .singleton import singleton_solution

log = logging.getLogger(__name__)

MODES = ("count", "report")
HEURISTICS = ("greedy", "drastic", "auto")


class _Cheaper(Solution):
    """Pointwise cheaper of two heuristic curves; ``b`` wins ties."""

    def __init__(self, a: Solution, b: Solution):
        super().__init__(min(a.limit, b.limit))
        ca, ra = a.curve()
        cb, rb = b.curve()
        n = self.limit + 1
        self.use_b = cb[:n] <= ca[:n]
        self.costs = np.where(self.use_b, cb[:n], ca[:n])
        self.removed = np.where(self.use_b, rb[:n], ra[:n])
        self.a, self.b = a, b

    def curve(self):
        return self.costs, self.removed

    def removals(self, m):
        return (self.b if self.use_b[m] else self.a).removals(m)


def _heuristic(q: Query, d: Instance, limit: int, ctx: Context) -> Solution:
    drastic = None
    if ctx.heuristic in ("drastic", "auto") and q.is_full:
        try:
            drastic = drastic_solution(q, d, limit)
            ctx.enter("drastic")
        except InfeasibleError as e:
            ctx.warnings.append(f"{e}; using greedy")
            log.warning("%s; using greedy", e)
        if ctx.heuristic == "drastic" and drastic is not None:
            return drastic
    elif ctx.heuristic == "drastic":
        msg = f"single-relation heuristic needs a full query, got {q}; using greedy"
        ctx.warnings.append(msg)
        log.warning(msg)
    ctx.enter("greedy")
    greedy, fallbacks = greedy_solution(q, d, limit)
    ctx.greedy_fallbacks += fallbacks
    return greedy if drastic is None else _Cheaper(greedy, drastic)


def _universe(q: Query, d: Instance, limit: int, ctx: Context) -> Solution:
    uni = universal_attributes(q)
    attrs = tuple(a for a in q.head if a in uni)
    sub = remove_attributes(q, attrs)
    if sub.collapsed:
        raise InternalInconsistency("relations merged while removing universal attributes")
    parts, lifts = [], []
    for key, part in partition_by(q, d, attrs).items():
        rows, lift_for = {}, {}
        for r in q.body:
            drop = [r.attrs.index(a) for a in attrs]
            keep = [i for i in range(len(r.attrs)) if i not in drop]
            rows[r.id] = {tuple(t[i] for i in keep) for t in part[r.id]}
            lift_for[r.id] = (r.attrs, sub.rel(r.id).attrs)
        inst = Instance(rows)
        n = count_results(sub, inst)
        parts.append(_solve(sub, inst, min(limit, n), ctx))
        lifts.append(_lifter(dict(zip(attrs, key)), lift_for))
    return GroupSum(parts, lifts, limit, ctx.report)


def _lifter(fixed: dict, lift_for: dict):
    def lift(removal):
        rid, t = removal
        full, short = lift_for[rid]
        values = dict(zip(short, t), **fixed)
        return rid, tuple(values[a] for a in full)
    return lift


def _decompose(q: Query, d: Instance, limit: int, ctx: Context) -> Solution:
    acc, total = None, 1
    for comp in connected_components(q):
        part = d.restrict(comp)
        m = count_results(comp, part)
        sol = _solve(comp, part, min(limit, m), ctx)
        if acc is None:
            acc, total = sol, m
        else:
            acc = Product(acc, sol, total, m, min(limit, total * m))
            total *= m
    return acc


def _stage_of(q: Query) -> str:
    if q.is_boolean:
        return "boolean" if find_triad_like(q) is None else "heuristic"
    if singleton_pivot(q) is not None:
        return "singleton"
    if universal_attributes(q):
        return "universe"
    if not is_connected(q):
        return "decompose"
    return "heuristic"


def _run_stage(stage: str, q: Query, d: Instance, limit: int, ctx: Context) -> Solution:
    if stage == "heuristic":
        return _heuristic(q, d, limit, ctx)
    ctx.enter(stage)
    if stage == "boolean":
        return boolean_solution(q, d)
    if stage == "singleton":
        return singleton_solution(q, d, singleton_pivot(q), limit)
    if stage == "universe":
        return _universe(q, d, limit, ctx)
    return _decompose(q, d, limit, ctx)


def _solve(q: Query, d: Instance, k: int, ctx: Context, stage: str | None = None) -> Solution:
    """Cost curve for removing up to ``k`` outputs of ``q`` over ``d``."""
    key = (q, d.fingerprint, stage, ctx.heuristic)
    hit = ctx.memo.get(key)
    if hit is not None and (hit[0].limit >= k or hit[0].limit == hit[1]):
        return hit[0]
    count = count_results(q, d)
    limit = min(k, count)
    if limit == 0:
        sol = empty_solution()
    else:
        sol = _run_stage(stage or _stage_of(q), q, d, limit, ctx)
    ctx.memo[key] = (sol, count)
    return sol


def _check_args(q: Query, d: Instance, k: int, mode: str, heuristic: str) -> int:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if heuristic not in HEURISTICS:
        raise ValueError(f"heuristic must be one of {HEURISTICS}")
    count = count_results(q, d)
    if count == 0:
        raise KOutOfRangeError("the query result is empty; nothing to remove")
    if not 1 <= k <= count:
        raise KOutOfRangeError(f"k={k} is outside 1..{count}")
    return count


def _finish(q: Query, d: Instance, k: int, sol: Solution, ctx: Context, exact: bool) -> AdpResult:
    cost, removed = sol.at(k)
    if cost >= INF or removed < k:
        raise InternalInconsistency("solver returned an infeasible plan", cost=cost, removed=removed)
    removals = None
    if ctx.report:
        removals = tuple(sorted(sol.removals(k)))
        if len(set(removals)) != cost:
            raise InternalInconsistency("removal set size differs from cost",
                                        cost=cost, removals=removals)
        actual = delta_count(q, d, removals)
        if actual != removed:
            raise InternalInconsistency("removed-output count differs from evaluation",
                                        expected=removed, actual=actual)
    meta = {"greedy_fallbacks": ctx.greedy_fallbacks}
    if ctx.warnings:
        meta["warnings"] = list(ctx.warnings)
    return AdpResult(cost, removed, exact, tuple(ctx.stages), removals, meta)


def compute_adp(q: Query, d: Instance, k: int, mode: str = "count",
                heuristic: str = "auto") -> AdpResult:
    """Delete the fewest input tuples so that at least ``k`` outputs disappear.

    Exact whenever the query admits a polynomial algorithm; otherwise the
    chosen heuristic runs at the stage where no exact rule applies.
    ``heuristic="auto"`` uses greedy, and on full sub-queries also the
    single-relation heuristic, keeping the cheaper answer.
    """
    if q.selections:
        _check_args(q, d, k, mode, heuristic)
        rq, rd = apply_selection(q, d)
        res = compute_adp(rq, rd, k, mode, heuristic)
        removals = None
        if res.removals is not None:
            removals = tuple(sorted(lift_removals(q, rq, res.removals)))
        return AdpResult(res.cost, res.removed_outputs, res.exact,
                         ("selection",) + res.path, removals, res.metadata)
    _check_args(q, d, k, mode, heuristic)
    ctx = Context(heuristic, mode == "report")
    sol = _solve(q, d, k, ctx)
    verdict = classify(q).is_ptime
    if verdict and ctx.heuristic_used:
        raise InternalInconsistency("a heuristic ran on a poly-time query", query=str(q),
                                    path=ctx.stages)
    return _finish(q, d, k, sol, ctx, verdict)


def _run_forced(stage: str, q: Query, d: Instance, k: int, mode: str, heuristic: str) -> AdpResult:
    if q.selections:
        raise QueryError("apply selections first (compute_adp does this automatically)")
    _check_args(q, d, k, mode, heuristic)
    ctx = Context(heuristic, mode == "report")
    sol = _solve(q, d, k, ctx, stage)
    return _finish(q, d, k, sol, ctx, not ctx.heuristic_used)


def solve_boolean(q: Query, d: Instance, mode: str = "count") -> AdpResult:
    """Resilience of a triad-free boolean query by minimum cut."""
    if not q.is_boolean or find_triad_like(q) is not None:
        raise QueryError("expected a boolean query without a triad")
    return _run_forced("boolean", q, d, 1, mode, "auto")


def solve_singleton(q: Query, d: Instance, k: int, mode: str = "count") -> AdpResult:
    if singleton_pivot(q) is None:
        raise QueryError("query has no pivot relation")
    return _run_forced("singleton", q, d, k, mode, "auto")


def solve_universe(q: Query, d: Instance, k: int, mode: str = "count") -> AdpResult:
    if not universal_attributes(q):
        raise QueryError("query has no universal attribute")
    if vacuum_relations(q):
        # a vacuum tuple is shared by every group, so groups are not independent
        raise QueryError("query has a vacuum relation; use the pivot rule instead")
    return _run_forced("universe", q, d, k, mode, "auto")


def solve_decompose(q: Query, d: Instance, k: int, mode: str = "count") -> AdpResult:
    if is_connected(q):
        raise QueryError("query is connected")
    return _run_forced("decompose", q, d, k, mode, "auto")


def greedy_for_cq(q: Query, d: Instance, k: int, mode: str = "count") -> AdpResult:
    return _run_forced("heuristic", q, d, k, mode, "greedy")


def drastic_greedy_full(q: Query, d: Instance, k: int, mode: str = "count") -> AdpResult:
    """Best prefix of one endogenous relation; raises InfeasibleError if none reaches k."""
    if not q.is_full:
        raise QueryError("the single-relation heuristic needs a full query")
    _check_args(q, d, k, mode, "drastic")
    ctx = Context("drastic", mode == "report")
    ctx.enter("drastic")
    sol = drastic_solution(q, d, k)
    return _finish(q, d, k, sol, ctx, False)
