"""Command-line front end: ``adpcq {decide,solve,oracle,gen,eval,bench}``.

Exit status: 0 on success, 2 on usage errors, 3 on invalid queries or
data, 4 when two routes that must agree do not.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

from .dichotomy import classification_to_json, classify
from .engine import apply_selection, count_results, load_instance, removal_to_json, write_instance
from .errors import AdpError, InternalInconsistency
from .oracle import DEFAULT_CAP, ZipfSpec, brute_force_adp, generate_zipf
from .solver import (
    HEURISTICS,
    MODES,
    compute_adp,
    drastic_greedy_full,
    greedy_for_cq,
    result_to_json,
)
from .text import parse_query

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
BENCH_GRID = ("0.1", "0.25", "0.5", "0.75")
BENCH_COLUMNS = ["query", "algorithm", "rho", "k", "cost", "removed_outputs", "exact", "millis"]

log = logging.getLogger("adpcq")


class UsageError(Exception):
    pass


def rho_to_k(rho: str, count: int) -> int:
    """Smallest k with k >= rho * count; rho is parsed exactly."""
    try:
        r = Fraction(rho)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--rho must be a number, got {rho!r}") from None
    if not 0 < r <= 1:
        raise UsageError("--rho must lie in (0, 1]")
    return max(1, math.ceil(r * count))


def _read_query(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    return parse_query(text)


def _target_k(args, q, d) -> int:
    if (args.k is None) == (args.rho is None):
        raise UsageError("give exactly one of -k and --rho")
    if args.k is not None:
        return args.k
    return rho_to_k(args.rho, count_results(q, d))


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


def cmd_decide(args) -> int:
    q = _read_query(args.query)
    _emit(args, _dump(classification_to_json(q, classify(q))))
    return EXIT_OK


def cmd_solve(args) -> int:
    q = _read_query(args.query)
    d = load_instance(q, args.data)
    k = _target_k(args, q, d)
    res = compute_adp(q, d, k, args.mode, args.heuristic)
    for w in res.metadata.get("warnings", ()):
        log.warning(w)
    _emit(args, _dump(result_to_json(q, res)))
    return EXIT_OK


def cmd_oracle(args) -> int:
    q = _read_query(args.query)
    d = load_instance(q, args.data)
    k = _target_k(args, q, d)
    truth = brute_force_adp(q, d, k, cap=args.cap)
    res = compute_adp(q, d, k, "report", args.heuristic)
    # a heuristic may be worse than the optimum but never better
    agree = res.cost == truth.cost if res.exact else res.cost >= truth.cost
    doc = {
        "k": k,
        "oracle": {"cost": truth.cost, "removed_outputs": truth.removed_outputs,
                   "removals": [removal_to_json(q, r) for r in truth.removals]},
        "solver": result_to_json(q, res),
        "agree": agree,
    }
    _emit(args, _dump(doc))
    return EXIT_OK if agree else EXIT_INTERNAL


def _load_spec(args) -> ZipfSpec:
    if args.spec:
        spec = ZipfSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
    else:
        if args.n is None:
            raise UsageError("give --spec or -n")
        spec = ZipfSpec(n=args.n, default_keys=args.keys, alpha=args.alpha)
    if args.seed is not None:
        spec = ZipfSpec(**{**spec.__dict__, "seed": args.seed})
    return spec


def cmd_gen(args) -> int:
    q = _read_query(args.query)
    spec = _load_spec(args)
    if not args.out:
        raise UsageError("gen needs -o/--out (a directory)")
    d = generate_zipf(spec, q)
    write_instance(q, d, args.out)
    (Path(args.out) / "spec.json").write_text(spec.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_eval(args) -> int:
    q = _read_query(args.query)
    d = load_instance(q, args.data)
    _emit(args, _dump({"count": count_results(q, d)}))
    return EXIT_OK


def _bench_cell(algorithm: str, q, d, k: int):
    if algorithm == "auto":
        return compute_adp(q, d, k)
    # heuristics run on the selection residual, like the exact path does
    if q.selections:
        q, d = apply_selection(q, d)
    if algorithm == "greedy":
        return greedy_for_cq(q, d, k)
    return drastic_greedy_full(q, d, k)


def cmd_bench(args) -> int:
    q = _read_query(args.query)
    d = load_instance(q, args.data)
    count = count_results(q, d)
    algorithms = args.algorithms.split(",")
    for a in algorithms:
        if a not in ("auto", "greedy", "drastic"):
            raise UsageError(f"unknown algorithm {a!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for rho in args.rho or BENCH_GRID:
        k = rho_to_k(rho, count)
        for a in algorithms:
            start = time.perf_counter()
            res = _bench_cell(a, q, d, k)
            millis = 0 if args.no_timing else round((time.perf_counter() - start) * 1000)
            w.writerow([q.name, a, rho, k, res.cost, res.removed_outputs,
                        str(res.exact).lower(), millis])
    _emit(args, buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adpcq", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True, target=False):
        sp.add_argument("-q", "--query", required=True, help="query file ('-' for stdin)")
        if data:
            sp.add_argument("-d", "--data", required=True, help="directory of <Relation>.csv files")
        if target:
            sp.add_argument("-k", type=int, help="number of outputs to remove")
            sp.add_argument("--rho", help="fraction of the result to remove, 0 < rho <= 1")
        sp.add_argument("-o", "--out", help="write output here instead of stdout")

    sp = sub.add_parser("decide", help="classify a query as poly-time or NP-hard")
    common(sp, data=False)
    sp.set_defaults(func=cmd_decide)

    sp = sub.add_parser("solve", help="solve one instance")
    common(sp, target=True)
    sp.add_argument("--mode", choices=MODES, default="count")
    sp.add_argument("--heuristic", choices=HEURISTICS, default="auto")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="compare the solver with exhaustive search")
    common(sp, target=True)
    sp.add_argument("--heuristic", choices=HEURISTICS, default="auto")
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest instance to enumerate")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gen", help="generate a Zipf-distributed instance")
    common(sp, data=False)
    sp.add_argument("--spec", help="ZipfSpec JSON document")
    sp.add_argument("-n", type=int, help="tuples per relation")
    sp.add_argument("--keys", type=int, default=100, help="distinct keys per attribute")
    sp.add_argument("--alpha", type=float, default=0.0, help="skew; 0 is uniform")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("eval", help="count query results")
    common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bench", help="cost and runtime table over a grid of rho")
    common(sp)
    sp.add_argument("--rho", action="append", help=f"repeatable; default {','.join(BENCH_GRID)}")
    sp.add_argument("--algorithms", default="auto,greedy", help="comma list of auto, greedy, drastic")
    sp.add_argument("--no-timing", action="store_true", help="write 0 for millis (byte-stable output)")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"adpcq: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InternalInconsistency as e:
        print(f"adpcq: internal inconsistency: {e}", file=sys.stderr)
        for key, val in e.artifacts.items():
            print(f"  {key}: {val}", file=sys.stderr)
        return EXIT_INTERNAL
    except (AdpError, OSError) as e:
        print(f"adpcq: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
