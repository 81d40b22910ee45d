"""Conjunctive query model and the structural predicates defined over it.

Nothing here touches data. Relations carry a stable integer ``id`` (body
order of the original query); sub-queries produced by decomposition or
attribute removal keep the ids of the relations they retain, so witnesses
can always be traced back to the user's query.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Union

from .errors import (
    DuplicateAttributeSetError,
    QueryError,
    SelectionError,
    SelfJoinError,
    UnknownHeadAttributeError,
)

Attribute = str


@dataclass(frozen=True)
class Relation:
    id: int
    name: str
    attrs: tuple[Attribute, ...]

    def __post_init__(self):
        if len(set(self.attrs)) != len(self.attrs):
            raise QueryError(f"relation {self.name} repeats an attribute: {self.attrs}")

    @cached_property
    def attrset(self) -> frozenset[Attribute]:
        return frozenset(self.attrs)

    @property
    def is_vacuum(self) -> bool:
        return not self.attrs


@dataclass(frozen=True, order=True)
class Selection:
    """Equality predicate ``relation.attr = value``."""

    relation: int
    attr: Attribute
    value: str


@dataclass(frozen=True)
class Query:
    head: tuple[Attribute, ...]
    body: tuple[Relation, ...]
    selections: tuple[Selection, ...] = ()
    name: str = "Q"
    # (dropped id, kept id) pairs produced when attribute removal collapsed
    # relations with identical attribute sets.
    collapsed: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def __post_init__(self):
        names = [r.name for r in self.body]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise SelfJoinError(f"relation {dup} appears more than once")
        ids = [r.id for r in self.body]
        if len(set(ids)) != len(ids):
            raise QueryError("relation ids must be unique")
        if len(set(self.head)) != len(self.head):
            raise QueryError("head repeats an attribute")
        missing = [a for a in self.head if a not in self.attrs]
        if missing:
            raise UnknownHeadAttributeError(
                f"head attribute(s) {', '.join(missing)} do not occur in the body")
        by_id = {r.id: r for r in self.body}
        for s in self.selections:
            rel = by_id.get(s.relation)
            if rel is None:
                raise SelectionError(f"selection references unknown relation id {s.relation}")
            if s.attr not in rel.attrset:
                raise SelectionError(f"selection on {rel.name}.{s.attr}: no such attribute")

    # -- basic accessors -------------------------------------------------

    @cached_property
    def attrs(self) -> tuple[Attribute, ...]:
        """All body attributes in order of first appearance."""
        seen: dict[Attribute, None] = {}
        for r in self.body:
            for a in r.attrs:
                seen.setdefault(a, None)
        return tuple(seen)

    @cached_property
    def headset(self) -> frozenset[Attribute]:
        return frozenset(self.head)

    @cached_property
    def _by_id(self) -> dict[int, Relation]:
        return {r.id: r for r in self.body}

    def rel(self, rid: int) -> Relation:
        return self._by_id[rid]

    def rel_by_name(self, name: str) -> Relation:
        for r in self.body:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def ids(self) -> list[int]:
        return [r.id for r in self.body]

    @property
    def is_boolean(self) -> bool:
        return not self.head

    @property
    def is_full(self) -> bool:
        return self.headset == frozenset(self.attrs)

    def rels_of(self, attr: Attribute) -> frozenset[int]:
        return frozenset(r.id for r in self.body if attr in r.attrset)

    def validate(self) -> "Query":
        """Full validation: also rejects relations sharing an attribute set."""
        seen: dict[frozenset, str] = {}
        for r in self.body:
            if r.attrset in seen:
                raise DuplicateAttributeSetError(
                    f"relations {seen[r.attrset]} and {r.name} have the same attributes")
            seen[r.attrset] = r.name
        return self

    def subquery(self, rids: Iterable[int]) -> "Query":
        keep = set(rids)
        body = tuple(r for r in self.body if r.id in keep)
        attrs = {a for r in body for a in r.attrs}
        return Query(
            head=tuple(a for a in self.head if a in attrs),
            body=body,
            selections=tuple(s for s in self.selections if s.relation in keep),
            name=self.name,
        )

    def without_selections(self) -> "Query":
        return Query(self.head, self.body, (), self.name)

    def __str__(self) -> str:
        from .text import render_query
        return render_query(self)


def make_query(head: Iterable[Attribute], atoms: Iterable[tuple[str, Iterable[Attribute]]],
               selections: Iterable[tuple[str, Attribute, str]] = (), name: str = "Q") -> Query:
    """Build and fully validate a query from plain Python values.

    >>> make_query("AB", [("R1", "A"), ("R2", "AB"), ("R3", "B")]).is_full
    True
    """
    body = tuple(Relation(i, n, tuple(a)) for i, (n, a) in enumerate(atoms))
    ids = {r.name: r.id for r in body}
    sels = []
    for rname, attr, value in selections:
        if rname not in ids:
            raise SelectionError(f"selection references unknown relation {rname}")
        sels.append(Selection(ids[rname], attr, value))
    return Query(tuple(head), body, tuple(sorted(sels)), name).validate()


# -- simplification primitives ---------------------------------------------

def universal_attributes(q: Query) -> frozenset[Attribute]:
    """Output attributes present in every non-vacuum relation."""
    nonvac = [r for r in q.body if not r.is_vacuum]
    if not nonvac:
        return frozenset()
    common = frozenset.intersection(*(r.attrset for r in nonvac))
    return common & q.headset


def remove_attributes(q: Query, s: Iterable[Attribute]) -> Query:
    """Drop ``s`` from every relation and the head.

    Relations that end up with identical attribute sets are collapsed onto
    the lowest id; the mapping is kept in ``Query.collapsed``.
    """
    s = frozenset(s)
    if not s:
        return q
    body = []
    kept: dict[frozenset, int] = {}
    collapsed = list(q.collapsed)
    for r in q.body:
        attrs = tuple(a for a in r.attrs if a not in s)
        key = frozenset(attrs)
        if key in kept:
            collapsed.append((r.id, kept[key]))
            continue
        kept[key] = r.id
        body.append(Relation(r.id, r.name, attrs))
    live = {r.id for r in body}
    sels = tuple(x for x in q.selections if x.attr not in s and x.relation in live)
    return Query(tuple(a for a in q.head if a not in s), tuple(body), sels, q.name,
                 tuple(collapsed))


def selection_residual(q: Query) -> Query:
    """Schema left once selected attributes are fixed to constants and dropped."""
    if not q.selections:
        return q
    return remove_attributes(q.without_selections(), {s.attr for s in q.selections})


def head_join(q: Query) -> Query:
    """Project every relation onto the head, keeping all relations."""
    body = tuple(Relation(r.id, r.name, tuple(a for a in r.attrs if a in q.headset))
                 for r in q.body)
    return Query(q.head, body, (), q.name)


def _components(q: Query) -> list[list[int]]:
    adj = {r.id: set() for r in q.body}
    for r1, r2 in itertools.combinations(q.body, 2):
        if r1.attrset & r2.attrset:
            adj[r1.id].add(r2.id)
            adj[r2.id].add(r1.id)
    seen: set[int] = set()
    out = []
    for r in q.body:
        if r.id in seen:
            continue
        comp, todo = [], deque([r.id])
        seen.add(r.id)
        while todo:
            x = todo.popleft()
            comp.append(x)
            for y in sorted(adj[x]):
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        out.append(sorted(comp))
    return out


def connected_components(q: Query) -> list[Query]:
    """Connected sub-queries of the relation-intersection graph, in id order."""
    comps = _components(q)
    if len(comps) == 1:
        return [q]
    return [q.subquery(c) for c in comps]


def is_connected(q: Query) -> bool:
    return len(_components(q)) <= 1


def vacuum_relations(q: Query) -> frozenset[int]:
    return frozenset(r.id for r in q.body if r.is_vacuum)


def endogenous_relations(q: Query) -> tuple[int, ...]:
    """Relations with no other relation on a strict subset of their attributes.

    Among relations sharing one attribute set only the lowest id counts as
    endogenous (validated queries never contain such groups).
    """
    out = []
    for rj in q.body:
        exo = False
        for ri in q.body:
            if ri.id == rj.id:
                continue
            if ri.attrset < rj.attrset or (ri.attrset == rj.attrset and ri.id < rj.id):
                exo = True
                break
        if not exo:
            out.append(rj.id)
    return tuple(out)


def dominated_by(q: Query, rj: int) -> Optional[int]:
    """Lowest-id relation dominating ``rj``, or None."""
    target = q.rel(rj)
    head = q.headset
    for ri in q.body:
        if ri.id == rj:
            continue
        ai = ri.attrset
        if not ai <= target.attrset:
            continue
        if ai == target.attrset:
            # identical sets: only the lowest id survives as non-dominated
            if ri.id < rj:
                return ri.id
            continue
        if not (ai <= head or head <= ai):
            continue
        bound = ai & head
        if all((target.attrset & rk.attrset) <= bound
               for rk in q.body if ai - rk.attrset):
            return ri.id
    return None


def non_dominated(q: Query) -> tuple[int, ...]:
    return tuple(r.id for r in q.body if dominated_by(q, r.id) is None)


def is_hierarchical(q: Query) -> bool:
    if not q.is_full:
        raise QueryError("is_hierarchical expects a full query (head = all attributes)")
    return _non_hierarchical_pair(q) is None


def _non_hierarchical_pair(q: Query):
    attrs = q.attrs
    rels = {a: q.rels_of(a) for a in attrs}
    for a, b in itertools.combinations(attrs, 2):
        ra, rb = rels[a], rels[b]
        if ra & rb and not (ra <= rb or rb <= ra):
            return a, b, min(ra - rb), min(ra & rb), min(rb - ra)
    return None


def singleton_pivot(q: Query) -> Optional[int]:
    head = q.headset
    cands = []
    for ri in q.body:
        if not all(ri.attrset <= rj.attrset for rj in q.body):
            continue
        if ri.attrset <= head or head <= ri.attrset:
            cands.append((len(ri.attrs), ri.id))
    return min(cands)[1] if cands else None


# -- hard structures ---------------------------------------------------------

def _reachable(q: Query, src: int, dst: int, allowed: frozenset[Attribute]) -> bool:
    """Is there a relation path src→dst whose hops share an allowed attribute?"""
    start = q.rel(src).attrset & allowed
    if not start or not (q.rel(dst).attrset & allowed):
        return False
    seen = {src}
    todo = deque([src])
    while todo:
        cur = q.rel(todo.popleft())
        mine = cur.attrset & allowed
        for r in q.body:
            if r.id in seen or not (r.attrset & mine):
                continue
            if r.id == dst:
                return True
            seen.add(r.id)
            todo.append(r.id)
    return False


def find_triad_like(q: Query) -> Optional[tuple[int, int, int]]:
    endo = endogenous_relations(q)
    base = frozenset(q.attrs) - q.headset
    for triple in itertools.combinations(endo, 3):
        ok = True
        for x, y, z in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            allowed = base - q.rel(triple[z]).attrset
            if not _reachable(q, triple[x], triple[y], allowed):
                ok = False
                break
        if ok:
            return triple
    return None


def find_strand(q: Query) -> Optional[tuple[int, int]]:
    head = q.headset
    nd = non_dominated(q)
    for i, j in itertools.combinations(nd, 2):
        ai, aj = q.rel(i).attrset, q.rel(j).attrset
        if (head & ai) != (head & aj) and (ai & aj) - head:
            return i, j
    return None


@dataclass(frozen=True)
class TriadLike:
    relations: tuple[int, int, int]
    kind = "triad_like"


@dataclass(frozen=True)
class Strand:
    relations: tuple[int, int]
    kind = "strand"


@dataclass(frozen=True)
class NonHierarchicalHeadJoin:
    attributes: tuple[Attribute, Attribute]
    relations: tuple[int, int, int]
    kind = "non_hierarchical_head_join"


HardStructure = Union[TriadLike, Strand, NonHierarchicalHeadJoin]


def nondominated_head_join(q: Query) -> Query:
    hj = head_join(q)
    keep = set(non_dominated(q))
    body = tuple(r for r in hj.body if r.id in keep)
    attrs = {a for r in body for a in r.attrs}
    return Query(tuple(a for a in q.head if a in attrs), body, (), q.name)


def hard_structure(q: Query) -> Optional[HardStructure]:
    """First hard structure found: triad-like, then strand, then head join."""
    t = find_triad_like(q)
    if t is not None:
        return TriadLike(t)
    s = find_strand(q)
    if s is not None:
        return Strand(s)
    nh = _non_hierarchical_pair(nondominated_head_join(q))
    if nh is not None:
        a, b, r1, r2, r3 = nh
        return NonHierarchicalHeadJoin((a, b), (r1, r2, r3))
    return None


def verify_structure(q: Query, hs: HardStructure) -> bool:
    """Re-check a witness against the definitions, independent of search order."""
    if isinstance(hs, TriadLike):
        endo = set(endogenous_relations(q))
        if not set(hs.relations) <= endo or len(set(hs.relations)) != 3:
            return False
        base = frozenset(q.attrs) - q.headset
        r = hs.relations
        return all(_reachable(q, r[x], r[y], base - q.rel(r[z]).attrset)
                   for x, y, z in ((0, 1, 2), (0, 2, 1), (1, 2, 0)))
    if isinstance(hs, Strand):
        i, j = hs.relations
        if dominated_by(q, i) is not None or dominated_by(q, j) is not None:
            return False
        ai, aj, head = q.rel(i).attrset, q.rel(j).attrset, q.headset
        return (head & ai) != (head & aj) and bool((ai & aj) - head)
    a, b = hs.attributes
    nd = set(non_dominated(q))
    ra = {x for x in nd if a in q.rel(x).attrset}
    rb = {x for x in nd if b in q.rel(x).attrset}
    r1, r2, r3 = hs.relations
    return (a in q.headset and b in q.headset and r1 in ra - rb
            and r2 in ra & rb and r3 in rb - ra)


def structure_to_json(q: Query, hs: Optional[HardStructure]):
    if hs is None:
        return None
    out = {"kind": hs.kind, "relations": [q.rel(r).name for r in hs.relations]}
    if isinstance(hs, NonHierarchicalHeadJoin):
        out["attributes"] = list(hs.attributes)
    return out
