"""Ground truth: exhaustive solvers, naive recurrences and synthetic data.

Nothing in here reuses the solver, and query evaluation is a separate
nested-loop implementation, so agreement with :mod:`adpcq.solver` means
something.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Optional

import numpy as np

from .engine import Instance
from .errors import CapExceededError, DataError, KOutOfRangeError, QueryError
from .query import (
    Query,
    connected_components,
    make_query,
    remove_attributes,
    universal_attributes,
)
from .solver.base import AdpResult
from .text import parse_query

DEFAULT_CAP = 18
SUBSET_CEILING = 2 ** 24


# -- independent evaluation --------------------------------------------------

@dataclass
class Lineage:
    """Input tuples (indexed) and, per output, the bitmasks of its witnesses."""
    tuples: list            # position -> (rid, tuple)
    outputs: dict           # output -> list of witness bitmasks


def lineage(q: Query, d: Instance) -> Lineage:
    tuples = [(r.id, t) for r in q.body for t in sorted(d[r.id])]
    pos = {x: i for i, x in enumerate(tuples)}
    sel = {}
    for s in q.selections:
        sel.setdefault(s.relation, []).append((q.rel(s.relation).attrs.index(s.attr), s.value))
    outputs: dict = {}

    def walk(i, binding, mask):
        if i == len(q.body):
            out = tuple(binding[a] for a in q.head)
            outputs.setdefault(out, []).append(mask)
            return
        r = q.body[i]
        for t in sorted(d[r.id]):
            if any(t[j] != v for j, v in sel.get(r.id, ())):
                continue
            if any(binding.get(a, v) != v for a, v in zip(r.attrs, t)):
                continue
            nb = dict(binding)
            nb.update(zip(r.attrs, t))
            walk(i + 1, nb, mask | (1 << pos[(r.id, t)]))

    walk(0, {}, 0)
    return Lineage(tuples, outputs)


def _killed(lin: Lineage, removed: int) -> int:
    return sum(1 for ws in lin.outputs.values() if all(w & removed for w in ws))


def _subsets(n: int, size: int) -> Iterator[tuple[int, ...]]:
    return itertools.combinations(range(n), size)


def _budget(n: int, size: int, spent: int, ceiling: int) -> int:
    spent += math.comb(n, size)
    if spent > ceiling:
        raise CapExceededError(f"more than {ceiling} subsets to enumerate")
    return spent


def brute_force_adp(q: Query, d: Instance, k: int, cap: int = DEFAULT_CAP,
                    ceiling: int = SUBSET_CEILING) -> AdpResult:
    """Smallest removal set, trying subsets by size then lexicographically."""
    lin = lineage(q, d)
    n = len(lin.tuples)
    if n > cap:
        raise CapExceededError(f"{n} tuples exceed the oracle cap of {cap}")
    if not 1 <= k <= len(lin.outputs):
        raise KOutOfRangeError(f"k={k} is outside 1..{len(lin.outputs)}")
    spent = 0
    for size in range(n + 1):
        spent = _budget(n, size, spent, ceiling)
        for combo in _subsets(n, size):
            mask = sum(1 << i for i in combo)
            gone = _killed(lin, mask)
            if gone >= k:
                removals = tuple(lin.tuples[i] for i in combo)
                return AdpResult(size, gone, True, ("brute_force",), removals)
    raise AssertionError("removing every tuple empties the result")


def brute_force_costs(q: Query, d: Instance, cap: int = DEFAULT_CAP,
                      ceiling: int = SUBSET_CEILING) -> list[int]:
    """Optimal cost for every k in 0..|Q(D)| from one sweep over subsets."""
    lin = lineage(q, d)
    n, total = len(lin.tuples), len(lin.outputs)
    if n > cap:
        raise CapExceededError(f"{n} tuples exceed the oracle cap of {cap}")
    costs = [0] + [None] * total
    best = 0
    spent = 0
    for size in range(1, n + 1):
        if best == total:
            break
        spent = _budget(n, size, spent, ceiling)
        top = max(_killed(lin, sum(1 << i for i in c)) for c in _subsets(n, size))
        for j in range(best + 1, top + 1):
            costs[j] = size
        best = max(best, top)
    return costs


def resilience(q: Query, d: Instance, cap: int = DEFAULT_CAP) -> int:
    """Fewest deletions making a boolean query false (0 if already false)."""
    if not q.is_boolean:
        raise QueryError("resilience is defined for boolean queries")
    costs = brute_force_costs(q, d, cap)
    return costs[1] if len(costs) > 1 else 0


# -- fixed small k on full queries -------------------------------------------

def fixed_k_full_adp(q: Query, d: Instance, k: int, max_k: int = 3) -> AdpResult:
    """Try every set of k outputs; tuples with the same effect on them are interchangeable."""
    if not q.is_full:
        raise QueryError("the fixed-k procedure needs a full query")
    if k > max_k:
        raise CapExceededError(f"k={k} above the fixed-k cap of {max_k}")
    lin = lineage(q, d)
    outs = sorted(lin.outputs)
    if not 1 <= k <= len(outs):
        raise KOutOfRangeError(f"k={k} is outside 1..{len(outs)}")
    best = None
    for chosen in itertools.combinations(outs, k):
        # in a full query each output has exactly one witness
        masks = [lin.outputs[o][0] for o in chosen]
        reps: dict[int, int] = {}
        for i in range(len(lin.tuples)):
            sig = sum(1 << b for b, m in enumerate(masks) if m >> i & 1)
            if sig and sig not in reps:
                reps[sig] = i
        sigs = sorted(reps)
        full = (1 << k) - 1
        for size in range(1, len(sigs) + 1):
            hit = next((c for c in itertools.combinations(sigs, size)
                        if _or(c) == full), None)
            if hit is not None:
                if best is None or size < best[0]:
                    best = (size, tuple(sorted(lin.tuples[reps[s]] for s in hit)))
                break
    size, removals = best
    mask = sum(1 << lin.tuples.index(x) for x in removals)
    return AdpResult(size, _killed(lin, mask), True, ("fixed_k",), removals)


def _or(values) -> int:
    out = 0
    for v in values:
        out |= v
    return out


# -- naive combination recurrences -------------------------------------------

def _naive_curve(q: Query, d: Instance, cap: int) -> list[int]:
    comps = connected_components(q)
    if len(comps) > 1:
        curves = [_naive_curve(c, d.restrict(c), cap) for c in comps]
        sizes = [len(c) - 1 for c in curves]
        total = math.prod(sizes)
        out = [0] + [math.inf] * total
        # every vector of per-component removal counts
        for ks in itertools.product(*(range(m + 1) for m in sizes)):
            gone = total - math.prod(m - x for m, x in zip(sizes, ks))
            cost = sum(c[x] for c, x in zip(curves, ks))
            for j in range(1, gone + 1):
                out[j] = min(out[j], cost)
        return out
    uni = [a for a in q.head if a in universal_attributes(q)]
    if uni:
        a = uni[0]
        sub = remove_attributes(q, [a])
        groups: dict = {}
        for r in q.body:
            i = r.attrs.index(a) if a in r.attrs else None
            for t in d[r.id]:
                key = t[i] if i is not None else None
                groups.setdefault(key, {}).setdefault(r.id, set()).add(
                    tuple(v for j, v in enumerate(t) if j != i))
        vac = [r.id for r in q.body if a not in r.attrs]
        curves = []
        for key in sorted(x for x in groups if x is not None):
            part = groups[key]
            for rid in vac:
                part[rid] = groups.get(None, {}).get(rid, set())
            curves.append(_naive_curve(sub, Instance(part), cap))
        opt = [0]
        for c in curves:
            nxt = [math.inf] * (len(opt) + len(c) - 1)
            for s in range(len(nxt)):
                for m in range(min(s, len(c) - 1) + 1):
                    if s - m < len(opt):
                        nxt[s] = min(nxt[s], opt[s - m] + c[m])
            opt = nxt
        return opt
    return brute_force_costs(q, d, cap)


def naive_combiners(q: Query, d: Instance, k: int, cap: int = DEFAULT_CAP) -> AdpResult:
    """Reference recurrences: full vector enumeration over components, or a
    per-value split on one universal attribute at a time.

    Only the cost is meaningful; ``removed_outputs`` echoes ``k``.
    """
    curve = _naive_curve(q, d, cap)
    if not 1 <= k < len(curve):
        raise KOutOfRangeError(f"k={k} is outside 1..{len(curve) - 1}")
    return AdpResult(int(curve[k]), k, True, ("naive",))


# -- synthetic data ------------------------------------------------------------

@dataclass(frozen=True)
class ZipfSpec:
    n: int
    keys: dict = field(default_factory=dict)   # attribute -> number of distinct keys
    default_keys: int = 100
    alpha: float = 0.0
    seed: int = 0
    skewed: tuple = ()   # attributes drawn with skew; empty means all

    def __post_init__(self):
        if self.n < 0 or self.alpha < 0 or self.default_keys < 1:
            raise DataError("n and alpha must be non-negative, key counts positive")
        if any(v < 1 for v in self.keys.values()):
            raise DataError("key counts must be positive")

    def keys_for(self, attr: str) -> int:
        return self.keys.get(attr, self.default_keys)

    def alpha_for(self, attr: str) -> float:
        return self.alpha if not self.skewed or attr in self.skewed else 0.0

    def to_json(self) -> str:
        doc = asdict(self)
        doc["skewed"] = list(self.skewed)
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ZipfSpec":
        doc = json.loads(text)
        unknown = set(doc) - {"n", "keys", "default_keys", "alpha", "seed", "skewed"}
        if unknown:
            raise DataError(f"unknown ZipfSpec fields: {sorted(unknown)}")
        doc["skewed"] = tuple(doc.get("skewed", ()))
        return cls(**doc)


def zipf_weights(keys: int, alpha: float) -> np.ndarray:
    w = np.arange(1, keys + 1, dtype=float) ** -alpha
    return w / w.sum()


def zipf_draws(rng: np.random.Generator, size: int, keys: int, alpha: float) -> np.ndarray:
    """Key ranks in 0..keys-1; rank i is drawn with probability ~ (i+1)^-alpha."""
    return rng.choice(keys, size=size, p=zipf_weights(keys, alpha))


def uniformity_z(ranks: np.ndarray, keys: int) -> float:
    """Chi-square statistic against the uniform law, as a z-score.

    The statistic has ``keys - 1`` degrees of freedom; for large samples
    ``(stat - dof) / sqrt(2 dof)`` is close to standard normal.
    """
    counts = np.bincount(ranks, minlength=keys)
    expected = len(ranks) / keys
    stat = float(((counts - expected) ** 2).sum() / expected)
    dof = keys - 1
    return (stat - dof) / math.sqrt(2 * dof)


def loglog_slope(ranks: np.ndarray, keys: int) -> float:
    """Least-squares slope of log frequency against log rank (ranks never drawn are skipped)."""
    counts = np.bincount(ranks, minlength=keys)
    seen = counts > 0
    x = np.log(np.arange(1, keys + 1))[seen]
    return float(np.polyfit(x, np.log(counts[seen]), 1)[0])


MAX_ROUNDS = 1000


def generate_zipf(spec: ZipfSpec, q: Query) -> Instance:
    """Every relation gets ``spec.n`` distinct tuples over shared value pools."""
    rng = np.random.default_rng(spec.seed)
    out = {}
    for r in q.body:
        capacity = math.prod(spec.keys_for(a) for a in r.attrs)
        if spec.n > capacity:
            raise DataError(f"{r.name}: {spec.n} tuples requested but only {capacity} exist")
        rows: set = set()
        rounds = 0
        while len(rows) < spec.n:
            rounds += 1
            if rounds > MAX_ROUNDS:
                raise DataError(f"{r.name}: could not draw {spec.n} distinct tuples")
            need = spec.n - len(rows)
            cols = [zipf_draws(rng, need, spec.keys_for(a), spec.alpha_for(a)) for a in r.attrs]
            for vals in zip(*cols) if cols else [()] * need:
                t = tuple(f"{a.lower()}{v}" for a, v in zip(r.attrs, vals))
                if t not in rows and len(rows) < spec.n:
                    rows.add(t)
        out[r.id] = rows
    return Instance(out)


def random_instance(q: Query, rng, max_tuples: int = 12, domain: int = 3) -> Instance:
    """Small uniform instance; a fresh share of ``max_tuples`` per relation."""
    per = max(1, max_tuples // max(len(q.body), 1))
    out = {}
    for r in q.body:
        if r.is_vacuum:
            out[r.id] = {()} if rng.random() < 0.8 else set()
            continue
        count = int(rng.integers(1, per + 1))
        out[r.id] = {tuple(f"{a.lower()}{int(rng.integers(domain))}" for a in r.attrs)
                     for _ in range(count)}
    return Instance(out)


# -- query corpus ----------------------------------------------------------------

def enumerate_queries(max_relations: int = 3, attributes: str = "ABCD",
                      min_relations: int = 1) -> Iterator[Query]:
    """Every query up to renaming attributes and reordering relations.

    Relations have distinct attribute sets (vacuum allowed); every head
    subset is produced. Ties are broken by a canonical minimum form.
    """
    attrs = tuple(attributes)
    subsets = [frozenset(c) for n in range(len(attrs) + 1)
               for c in itertools.combinations(attrs, n)]
    perms = list(itertools.permutations(attrs))
    seen = set()
    for n in range(min_relations, max_relations + 1):
        for rels in itertools.combinations(subsets, n):
            used = sorted(set().union(*rels))
            for hn in range(len(used) + 1):
                for head in itertools.combinations(used, hn):
                    key = min(
                        (tuple(sorted(tuple(sorted(m[a] for a in r)) for r in rels)),
                         tuple(sorted(m[a] for a in head)))
                        for m in (dict(zip(attrs, p)) for p in perms))
                    if key in seen:
                        continue
                    seen.add(key)
                    body, h = key
                    yield make_query(h, [(f"R{i + 1}", r) for i, r in enumerate(body)])


NAMED_QUERIES = {
    "chain_full": "Q1(A,B,C,E) :- R1(A,B), R2(B,C), R3(C,E)",
    "chain_projected": "Q2(A,E) :- R1(A,B), R2(B,C), R3(C,E)",
    "path": "Qpath(A,B) :- R1(A), R2(A,B), R3(B)",
    "swing": "Qswing(A) :- R2(A,B), R3(B)",
    "seesaw": "Qseesaw(A) :- R1(A), R2(A,B), R3(B)",
    "triangle": "Qtri() :- R1(A,B), R2(B,C), R3(C,A)",
    "tripod": "QT() :- R1(A,B,C), R2(A), R3(B), R4(C)",
    "shared_existential": "Q(A,B,C) :- R1(A,B,E), R2(A,C,E)",
    "hierarchical": "Q(A,B,C,E,F,H) :- R1(A,B,C), R2(A,B,F), R3(A,E), R4(A,E,H)",
    "universal_then_vacuum": "Q(A,B,E) :- R1(A,E), R2(A,B,E), R3(B,E), R4(E)",
    "vacuum": "Q(A,B) :- R0(), R1(A,B), R2(B)",
    "boolean_chain": "Q() :- R1(A), R2(A,B), R3(B)",
    "singleton": "Qsingle(A,B) :- R1(A), R2(A,B)",
    "three_chain": "Q3(A,B,C,D) :- R1(A,B), R2(B,C), R3(C,D)",
}


def named_query(name: str) -> Query:
    return parse_query(NAMED_QUERIES[name])
