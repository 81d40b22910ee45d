"""Procedural poly-time test with a replayable trace, and the combined classifier.

The procedural test alternates two simplifications (drop universal output
attributes, split into connected components) until it reaches a base case.
:func:`classify` pairs its verdict with the structural witness search in
:mod:`adpcq.query` and refuses to return if the two disagree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .errors import InternalInconsistency
from .query import (
    HardStructure,
    Query,
    connected_components,
    find_triad_like,
    hard_structure,
    is_connected,
    remove_attributes,
    selection_residual,
    structure_to_json,
    universal_attributes,
    vacuum_relations,
)


@dataclass(frozen=True)
class RemovedUniversal:
    attrs: tuple[str, ...]


@dataclass(frozen=True)
class Decomposed:
    components: int


@dataclass(frozen=True)
class BaseBoolean:
    triad: Optional[tuple[int, int, int]]


@dataclass(frozen=True)
class BaseVacuum:
    relation: int


@dataclass(frozen=True)
class BaseOthers:
    query: Query


Step = Union[RemovedUniversal, Decomposed, BaseBoolean, BaseVacuum, BaseOthers]


@dataclass(frozen=True)
class DecisionTrace:
    steps: tuple[Step, ...]
    verdict: bool


@dataclass(frozen=True)
class Classification:
    is_ptime: bool
    structure: Optional[HardStructure]
    trace: DecisionTrace

    def __post_init__(self):
        if self.is_ptime != (self.structure is None):
            raise InternalInconsistency(
                "procedural verdict and structural witness disagree",
                is_ptime=self.is_ptime, structure=self.structure, trace=self.trace)


def _walk(q: Query, steps: list) -> bool:
    uni = universal_attributes(q)
    if uni:
        steps.append(RemovedUniversal(tuple(a for a in q.head if a in uni)))
        q = remove_attributes(q, uni)
    if q.is_boolean:
        triad = find_triad_like(q)
        steps.append(BaseBoolean(triad))
        return triad is None
    vac = vacuum_relations(q)
    if vac:
        steps.append(BaseVacuum(min(vac)))
        return True
    comps = connected_components(q)
    if len(comps) > 1:
        steps.append(Decomposed(len(comps)))
        # every component is walked so the trace is complete
        results = [_walk(c, steps) for c in comps]
        return all(results)
    steps.append(BaseOthers(q))
    return False


def is_ptime(q: Query) -> DecisionTrace:
    steps: list[Step] = []
    verdict = _walk(q, steps)
    return DecisionTrace(tuple(steps), verdict)


def replay_trace(q: Query, trace: DecisionTrace) -> bool:
    """Re-apply a trace's steps to ``q``, checking each one, and return the verdict."""
    steps = list(trace.steps)
    pos = 0

    def expect(cond, what):
        if not cond:
            raise InternalInconsistency(f"trace replay failed: {what}", trace=trace)

    def walk(q: Query) -> bool:
        nonlocal pos
        expect(pos < len(steps), "trace ended early")
        step = steps[pos]
        if isinstance(step, RemovedUniversal):
            expect(set(step.attrs) == universal_attributes(q), "universal attribute set")
            q = remove_attributes(q, step.attrs)
            pos += 1
            expect(pos < len(steps), "trace ended early")
            step = steps[pos]
        else:
            expect(not universal_attributes(q), "universal attributes left in place")
        pos += 1
        if isinstance(step, BaseBoolean):
            expect(q.is_boolean, "boolean base case on non-boolean query")
            expect(step.triad == find_triad_like(q), "triad witness")
            return step.triad is None
        if isinstance(step, BaseVacuum):
            expect(not q.is_boolean and step.relation in vacuum_relations(q), "vacuum base case")
            return True
        if isinstance(step, Decomposed):
            comps = connected_components(q)
            expect(not q.is_boolean and not vacuum_relations(q), "decomposition guard")
            expect(len(comps) == step.components > 1, "component count")
            return all([walk(c) for c in comps])
        if isinstance(step, BaseOthers):
            expect(not q.is_boolean and not vacuum_relations(q) and is_connected(q),
                   "others guard")
            expect(step.query == q, "others sub-query")
            return False
        expect(False, f"unexpected step {step!r}")

    verdict = walk(q)
    expect(pos == len(steps), "trailing steps")
    expect(verdict == trace.verdict, "verdict")
    return verdict


def classify(q: Query) -> Classification:
    """Verdict, witness and trace; a query with selections is judged by its residual."""
    q = selection_residual(q)
    trace = is_ptime(q)
    return Classification(trace.verdict, hard_structure(q), trace)


def _step_json(q: Query, step: Step) -> dict:
    if isinstance(step, RemovedUniversal):
        return {"step": "removed_universal", "attrs": list(step.attrs)}
    if isinstance(step, Decomposed):
        return {"step": "decomposed", "components": step.components}
    if isinstance(step, BaseBoolean):
        triad = None if step.triad is None else [q.rel(r).name for r in step.triad]
        return {"step": "base_boolean", "triad": triad}
    if isinstance(step, BaseVacuum):
        return {"step": "base_vacuum", "relation": q.rel(step.relation).name}
    return {"step": "base_others", "query": str(step.query)}


def classification_to_json(q: Query, c: Classification) -> dict:
    return {
        "is_ptime": c.is_ptime,
        "structure": structure_to_json(q, c.structure),
        "trace": [_step_json(q, s) for s in c.trace.steps],
    }
