"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
import warnings

import numpy as np

from .cct import build_cct
from .edo import SeparatorHierarchy, build_hierarchy
from .graph import (
    CHECK_BUDGET,
    FAMILIES,
    GraphFormatError,
    all_pairs,
    estimate_packedness,
    exhaustive_guard,
    generate_family,
    read_graph,
)
from .separator import build_separator, verify_separator
from .treecover import TreeCover, build_tree_cover
from .wspd import build_wspd, euclidean_dist_fn, matrix_dist_fn, verify_wspd

log = logging.getLogger("cpack")

OK, VERIFY_FAIL, INPUT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


def _load(path: str, need_connected: bool = True):
    try:
        g = read_graph(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except GraphFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    if need_connected and not g.is_connected():
        labels = g.components()
        parts = [np.flatnonzero(labels == k).tolist() for k in range(int(labels.max()) + 1)]
        listing = "; ".join(" ".join(map(str, p[:10])) + (" ..." if len(p) > 10 else "") for p in parts)
        raise InputError(f"{path}: graph is disconnected into {len(parts)} components: {listing}")
    if need_connected and g.has_duplicate_points():
        raise InputError(f"{path}: distinct vertices share coordinates")
    return g


def _resolve_c(g, c):
    if c is not None:
        if not c > 0:
            raise InputError("--c must be positive")
        return c
    est = estimate_packedness(g, CHECK_BUDGET) if g.m else 1.0
    log.info("no --c given; using the estimated lower bound %.6g", est)
    return max(est, 1.0)


def fmt(x: float) -> str:
    return format(x, ".12g")


def cmd_verify_packed(args) -> int:
    g = _load(args.graph, need_connected=False)
    est = estimate_packedness(g, args.budget)
    ok = est <= args.c * (1 + 1e-12)
    print(f"c_hat {fmt(est)}")
    print(f"declared {fmt(args.c)} {'PASS' if ok else 'FAIL'}")
    return OK if ok else VERIFY_FAIL


def cmd_build_wspd(args) -> int:
    if not args.sigma > 1:
        raise InputError("--sigma must be > 1")
    g = _load(args.graph)
    c = _resolve_c(g, args.c)
    t = build_cct(g, c)
    if args.flavor == "graph":
        D = build_hierarchy(g, c).distance_matrix()
        w = build_wspd(t, args.sigma, "graph", matrix_dist_fn(D))
    else:
        w = build_wspd(t, args.sigma, "euclidean", euclidean_dist_fn(g.coords))
        D = None
    print(f"pairs {len(w)}")
    print(f"cct_nodes {len(t.nodes)}")
    if args.emit_pairs:
        text = "\n".join(w.dump_lines()) + "\n"
        if args.emit_pairs == "-":
            sys.stdout.write(text)
        else:
            with open(args.emit_pairs, "w") as fh:
                fh.write(text)
    if args.verify:
        guard = exhaustive_guard(500)
        if g.n > guard:
            print(f"verify skipped: n={g.n} exceeds guard {guard}")
            return OK
        dist = all_pairs(g) if D is None else D
        rep = verify_wspd(w, dist, max_n=guard)
        for p in rep.problems:
            print(p)
        print("verify PASS" if rep.ok else "verify FAIL")
        return OK if rep.ok else VERIFY_FAIL
    return OK


def cmd_separator(args) -> int:
    g = _load(args.graph)
    if g.n < 2:
        raise InputError("separator needs at least two vertices")
    res = build_separator(g, args.c, args.beta)
    print("C: " + " ".join(map(str, res.C.tolist())))
    print(f"{len(res.A)} {len(res.B)}")
    print(f"flow {res.flow}")
    print(f"beta_achieved {fmt(res.beta_achieved)}")
    problems = verify_separator(g, res)
    for p in problems:
        print(p)
    return VERIFY_FAIL if problems else OK


def cmd_build_edo(args) -> int:
    g = _load(args.graph)
    h = build_hierarchy(g, args.c, args.n0)
    h.save(args.output)
    print(f"nodes {len(h.nodes)} height {h.height()} spt_entries {h.spt_entries()}")
    return OK


def _vertex(h_n: int, raw: str) -> int:
    try:
        v = int(raw)
    except ValueError:
        raise InputError(f"vertex id {raw!r} is not an integer") from None
    if not 0 <= v < h_n:
        raise InputError(f"vertex id {v} out of range [0, {h_n})")
    return v


def _load_json(path: str, cls):
    try:
        return cls.load(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: not a valid oracle file ({exc})") from None


def cmd_query_edo(args) -> int:
    h = _load_json(args.oracle, SeparatorHierarchy)
    print(fmt(h.distance(_vertex(h.n, args.u), _vertex(h.n, args.v))))
    return OK


def cmd_build_ado(args) -> int:
    if not 0 < args.epsilon < 1:
        raise InputError("--epsilon must be in (0, 1)")
    g = _load(args.graph)
    c = _resolve_c(g, args.c)
    cover = build_tree_cover(g, args.epsilon, c)
    cover.save(args.output)
    print(f"dumbbells {len(cover.dumbbells)} trees {len(cover.trees)}")
    return OK


def cmd_query_ado(args) -> int:
    cover = _load_json(args.oracle, TreeCover)
    print(fmt(cover.query(_vertex(cover.n, args.u), _vertex(cover.n, args.v))))
    return OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    rep = run_selftest(exhaustive_guard(args.max_n), mutate=args.mutate, seed=args.seed)
    for f in rep.failures:
        print(f)
    print(f"selftest {'PASS' if rep.ok else 'FAIL'} ({rep.checks} checks, {len(rep.failures)} failures)")
    return OK if rep.ok else VERIFY_FAIL


def _bench_row(structure: str, g, c: float, param: float, queries: int, rng) -> list:
    pairs = rng.integers(0, g.n, size=(queries, 2))
    t0 = time.perf_counter()
    if structure == "wspd":
        t = build_cct(g, c, check_c=False)
        w = build_wspd(t, param, "euclidean", euclidean_dist_fn(g.coords))
        build = time.perf_counter() - t0
        size = len(w)
        query_ns = math.nan
    elif structure == "edo":
        h = build_hierarchy(g, c)
        build = time.perf_counter() - t0
        size = h.spt_entries()
        q0 = time.perf_counter()
        for u, v in pairs.tolist():
            h.distance(u, v)
        query_ns = (time.perf_counter() - q0) / queries * 1e9
    else:
        cover = build_tree_cover(g, param, c, t=build_cct(g, c, check_c=False))
        build = time.perf_counter() - t0
        size = len(cover.trees)
        q0 = time.perf_counter()
        for u, v in pairs.tolist():
            cover.query(u, v)
        query_ns = (time.perf_counter() - q0) / queries * 1e9
    return [g.n, fmt(c), fmt(param), f"{build * 1e3:.3f}", size, "" if math.isnan(query_ns) else f"{query_ns:.0f}"]


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["n", "c", "sigma_or_eps", "build_ms", "size", "query_ns"])
    if args.structure == "ado":
        param = args.epsilon
        if not 0 < param < 1:
            raise InputError("--epsilon must be in (0, 1)")
    else:
        param = args.sigma
        if not param > 1:
            raise InputError("--sigma must be > 1")
    for n in args.sizes:
        g, c = generate_family(args.family, n, args.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            writer.writerow(_bench_row(args.structure, g, c, param, args.queries, rng))
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpack", description="Distance structures for c-packed geometric graphs.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-packed", help="estimate a packedness lower bound and compare with c")
    p.add_argument("graph")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--budget", type=int, default=200_000)
    p.set_defaults(func=cmd_verify_packed)

    p = sub.add_parser("build-wspd", help="build a WSPD and report its size")
    p.add_argument("graph")
    p.add_argument("--c", type=float)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--flavor", choices=("graph", "euclidean"), default="graph")
    p.add_argument("--emit-pairs", metavar="FILE", help="write pair lines to FILE ('-' for stdout)")
    p.add_argument("--verify", action="store_true", help="run the exhaustive verifier")
    p.set_defaults(func=cmd_build_wspd)

    p = sub.add_parser("separator", help="compute a balanced separator")
    p.add_argument("graph")
    p.add_argument("--c", type=float)
    p.add_argument("--beta", type=float, default=0.25)
    p.set_defaults(func=cmd_separator)

    p = sub.add_parser("build-edo", help="build the exact distance oracle")
    p.add_argument("graph")
    p.add_argument("--c", type=float)
    p.add_argument("--n0", type=int, default=8)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_build_edo)

    p = sub.add_parser("query-edo", help="exact distance query")
    p.add_argument("oracle")
    p.add_argument("u")
    p.add_argument("v")
    p.set_defaults(func=cmd_query_edo)

    p = sub.add_parser("build-ado", help="build the approximate distance oracle (tree cover)")
    p.add_argument("graph")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--c", type=float)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_build_ado)

    p = sub.add_parser("query-ado", help="approximate distance query")
    p.add_argument("oracle")
    p.add_argument("u")
    p.add_argument("v")
    p.set_defaults(func=cmd_query_ado)

    p = sub.add_parser("selftest", help="run invariant suites on generated families")
    p.add_argument("--max-n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mutate", choices=("drop-pair", "duplicate-pair", "dub-low", "ab-edge"))
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("bench", help="CSV scaling sweep over a generated family")
    p.add_argument("--structure", choices=("wspd", "edo", "ado"), default="edo")
    p.add_argument("--family", choices=FAMILIES, default="path")
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    p.add_argument("--sigma", type=float, default=4.0)
    p.add_argument("--epsilon", type=float, default=0.9)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


def _entry() -> None:  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    _entry()
