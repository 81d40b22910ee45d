"""In-memory instances, CSV ingestion and join evaluation.

Tuples are plain Python tuples of strings aligned with the owning
relation's ``attrs`` order. An :class:`Instance` maps relation ids to
frozensets of such tuples; it never changes after construction.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from collections import defaultdict
from operator import itemgetter
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataError
from .query import Query, Relation, connected_components, remove_attributes

log = logging.getLogger(__name__)

Row = tuple
Removal = tuple[int, Row]


class Instance:
    __slots__ = ("_rels", "_fp")

    def __init__(self, relations: Mapping[int, Iterable[Row]]):
        self._rels = {rid: frozenset(rows) for rid, rows in relations.items()}
        self._fp = None

    def __getitem__(self, rid: int) -> frozenset:
        return self._rels.get(rid, frozenset())

    def __eq__(self, other):
        return isinstance(other, Instance) and self._rels == other._rels

    def __hash__(self):
        return hash(self.fingerprint)

    def __repr__(self):
        sizes = ", ".join(f"{rid}: {len(r)}" for rid, r in sorted(self._rels.items()))
        return f"Instance({{{sizes}}})"

    def items(self):
        return sorted(self._rels.items())

    @property
    def size(self) -> int:
        return sum(len(r) for r in self._rels.values())

    def tuples(self, q: Query) -> list[Removal]:
        """All (relation id, tuple) pairs of ``q``'s relations, in canonical order."""
        return [(r.id, t) for r in q.body for t in sorted(self[r.id])]

    def without(self, removals: Iterable[Removal]) -> "Instance":
        drop = defaultdict(set)
        for rid, t in removals:
            drop[rid].add(t)
        return Instance({rid: rows - drop[rid] if rid in drop else rows
                         for rid, rows in self._rels.items()})

    def restrict(self, q: Query) -> "Instance":
        return Instance({r.id: self[r.id] for r in q.body})

    @property
    def fingerprint(self) -> str:
        if self._fp is None:
            h = hashlib.blake2b(digest_size=16)
            for rid, rows in sorted(self._rels.items()):
                h.update(repr((rid, sorted(rows))).encode())
            self._fp = h.hexdigest()
        return self._fp

    def check(self, q: Query) -> "Instance":
        for r in q.body:
            for t in self[r.id]:
                if len(t) != len(r.attrs):
                    raise DataError(f"tuple {t} does not match schema of {r.name}{r.attrs}")
        return self


def instance_from_rows(q: Query, rows: Mapping[str, Iterable[Iterable[str]]]) -> Instance:
    """Build an instance keyed by relation *name*; handy in tests and examples.

    A bare string row stands for a one-value tuple.
    """
    out = {}
    for r in q.body:
        out[r.id] = {(t,) if isinstance(t, str) else tuple(str(v) for v in t)
                     for t in rows.get(r.name, ())}
    return Instance(out).check(q)


# -- CSV -------------------------------------------------------------------

def load_relation_csv(schema: Relation, data: bytes) -> tuple[frozenset, int]:
    """Parse one relation; returns (tuples, number of duplicate rows collapsed)."""
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise DataError(f"{schema.name}: not valid UTF-8 ({e})") from None
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{schema.name}: missing header row") from None
    if schema.is_vacuum:
        if header not in ([], [""]):
            raise DataError(f"{schema.name}: vacuum relation expects an empty header")
        n = sum(1 for row in reader if row in ([], [""]))
        return (frozenset({()}) if n else frozenset()), max(n - 1, 0)
    if sorted(header) != sorted(schema.attrs) or len(set(header)) != len(header):
        raise DataError(f"{schema.name}: header {header} does not match attributes {list(schema.attrs)}")
    pick = itemgetter(*(header.index(a) for a in schema.attrs))
    rows = set()
    dups = 0
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{schema.name}: line {lineno} has {len(row)} fields, expected {len(header)}")
        t = pick(row)
        t = t if isinstance(t, tuple) else (t,)
        if t in rows:
            dups += 1
        rows.add(t)
    if dups:
        log.warning("%s: collapsed %d duplicate row(s)", schema.name, dups)
    return frozenset(rows), dups


def dump_relation_csv(schema: Relation, rows: Iterable[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if schema.is_vacuum:
        return "\n" + ("\n" if rows else "")
    w.writerow(schema.attrs)
    for t in sorted(rows):
        w.writerow(t)
    return buf.getvalue()


def load_instance(q: Query, directory) -> Instance:
    directory = Path(directory)
    out = {}
    for r in q.body:
        path = directory / f"{r.name}.csv"
        if not path.exists():
            raise DataError(f"missing {path}")
        out[r.id], _ = load_relation_csv(r, path.read_bytes())
    return Instance(out)


def write_instance(q: Query, d: Instance, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for r in q.body:
        (directory / f"{r.name}.csv").write_text(dump_relation_csv(r, d[r.id]), encoding="utf-8")


# -- evaluation --------------------------------------------------------------

def _selected(q: Query, d: Instance) -> Instance:
    keep = {r.id: d[r.id] for r in q.body}
    for s in q.selections:
        i = q.rel(s.relation).attrs.index(s.attr)
        keep[s.relation] = {t for t in keep[s.relation] if t[i] == s.value}
    return Instance(keep)


def _join(q: Query, d: Instance) -> list[Row]:
    """Natural join over ``q.attrs`` honouring selections; unsorted."""
    if q.selections:
        d = _selected(q, d)
    for r in q.body:
        if r.is_vacuum and not d[r.id]:
            return []
    rels = [r for r in q.body if not r.is_vacuum]
    if not rels:
        return [()]
    remaining = sorted(rels, key=lambda r: (len(d[r.id]), r.id))
    first = remaining.pop(0)
    cols = list(first.attrs)
    rows = list(d[first.id])
    while remaining and rows:
        linked = [r for r in remaining if r.attrset & set(cols)]
        nxt = (linked or remaining)[0]
        remaining.remove(nxt)
        shared = [a for a in nxt.attrs if a in cols]
        fresh = [i for i, a in enumerate(nxt.attrs) if a not in cols]
        key_in_rel = [nxt.attrs.index(a) for a in shared]
        index: dict[tuple, list] = defaultdict(list)
        for t in d[nxt.id]:
            index[tuple(t[i] for i in key_in_rel)].append(tuple(t[i] for i in fresh))
        key_in_row = [cols.index(a) for a in shared]
        if len(key_in_row) == 1:
            j = key_in_row[0]
            rows = [row + ext for row in rows for ext in index.get((row[j],), ())]
        else:
            rows = [row + ext for row in rows
                    for ext in index.get(tuple(row[i] for i in key_in_row), ())]
        cols += [nxt.attrs[i] for i in fresh]
    if remaining or not rows:
        return []
    order = [cols.index(a) for a in q.attrs]
    if order == list(range(len(cols))):
        return rows
    if len(order) == 1:
        return [(row[order[0]],) for row in rows]
    get = itemgetter(*order)
    return [get(row) for row in rows]


def full_join(q: Query, d: Instance) -> list[Row]:
    """Rows over ``q.attrs`` in lexicographic order."""
    return sorted(_join(q, d))


def projector(src: tuple, dst: Iterable[str]):
    """Return a callable projecting rows over ``src`` onto ``dst``."""
    idx = [src.index(a) for a in dst]
    if not idx:
        return lambda row: ()
    if len(idx) == 1:
        i = idx[0]
        return lambda row: (row[i],)
    return itemgetter(*idx)


def evaluate(q: Query, d: Instance) -> set[Row]:
    proj = projector(q.attrs, q.head)
    return {proj(row) for row in _join(q, d)}


def count_results(q: Query, d: Instance) -> int:
    if q.selections:
        # outputs match those of the residual one-to-one
        return count_results(*apply_selection(q, d))
    comps = connected_components(q)
    if len(comps) > 1:
        # outputs of a disconnected query are the product of its parts
        n = 1
        for c in comps:
            n *= count_results(c, d)
        return n
    if q.is_full:
        return len(_join(q, d))
    return len(evaluate(q, d))


def reduce_dangling(q: Query, d: Instance) -> Instance:
    rows = _join(q, d)
    out = dict(d._rels)
    for r in q.body:
        proj = projector(q.attrs, r.attrs)
        out[r.id] = {proj(row) for row in rows}
    return Instance(out)


def partition_by(q: Query, d: Instance, attrs) -> dict[tuple, Instance]:
    """Split ``d`` by the values of ``attrs`` (which every non-vacuum relation has).

    Only value combinations present in every non-vacuum relation are kept;
    vacuum relations are copied into every part.
    """
    attrs = tuple(attrs)
    nonvac = [r for r in q.body if not r.is_vacuum]
    for r in nonvac:
        if not set(attrs) <= r.attrset:
            raise DataError(f"partition attributes {attrs} are not all in {r.name}")
    groups: dict[int, dict[tuple, list]] = {}
    for r in nonvac:
        proj = projector(r.attrs, attrs)
        g = defaultdict(list)
        for t in d[r.id]:
            g[proj(t)].append(t)
        groups[r.id] = g
    if not nonvac:
        return {(): d.restrict(q)}
    keys = set(groups[nonvac[0].id])
    for r in nonvac[1:]:
        keys &= groups[r.id].keys()
    vac = {r.id: d[r.id] for r in q.body if r.is_vacuum}
    out = {}
    for key in sorted(keys):
        part = {rid: g[key] for rid, g in groups.items()}
        part.update(vac)
        out[key] = Instance(part)
    return out


def apply_selection(q: Query, d: Instance) -> tuple[Query, Instance]:
    """Filter by the equality predicates and drop the selected attributes.

    A constant selected on one relation also constrains every other relation
    holding that attribute (the join forces equal values), so the filter is
    applied everywhere the attribute occurs. Relations left with identical
    attribute sets are merged by intersection onto the lowest id.
    """
    consts: dict[str, set] = defaultdict(set)
    for s in q.selections:
        consts[s.attr].add(s.value)
    base = q.without_selections()
    residual = remove_attributes(base, consts)
    filtered = {}
    for r in q.body:
        checks = [(i, consts[a]) for i, a in enumerate(r.attrs) if a in consts]
        keep = [i for i, a in enumerate(r.attrs) if a not in consts]
        rows = set()
        for t in d[r.id]:
            if all(len(vals) == 1 and t[i] in vals for i, vals in checks):
                rows.add(tuple(t[i] for i in keep))
        filtered[r.id] = rows
    for dropped, kept in residual.collapsed:
        filtered[kept] &= filtered.pop(dropped)
    live = {r.id for r in residual.body}
    return residual, Instance({rid: rows for rid, rows in filtered.items() if rid in live})


def lift_removals(q: Query, residual: Query, removals: Iterable[Removal]) -> list[Removal]:
    """Map removals on a selection residual back to tuples of the original query."""
    consts = {s.attr: s.value for s in q.selections}
    out = []
    for rid, t in removals:
        values = dict(zip(residual.rel(rid).attrs, t))
        values.update(consts)
        out.append((rid, tuple(values[a] for a in q.rel(rid).attrs)))
    return out


def delta_count(q: Query, d: Instance, removals: Iterable[Removal]) -> int:
    removals = list(removals)
    if not removals:
        return 0
    return count_results(q, d) - count_results(q, d.without(removals))


def profit(q: Query, d: Instance, rid: int, t: Row) -> int:
    return delta_count(q, d, [(rid, t)])


def removal_to_json(q: Query, removal: Removal) -> dict:
    rid, t = removal
    r = q.rel(rid)
    return {"relation": r.name, "tuple": dict(zip(r.attrs, t))}
