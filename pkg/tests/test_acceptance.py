"""One test per acceptance criterion; each prints a single PASS/FAIL line."""
from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from cpack.cct import build_cct, check_cct
from cpack.cli import fmt
from cpack.edo import SeparatorHierarchy, build_hierarchy
from cpack.graph import CHECK_BUDGET, GeometricGraph, all_pairs, estimate_packedness, floyd_warshall, format_graph, generate_family
from cpack.selftest import MUTATIONS, mutate_separator, mutate_wspd, run_selftest
from cpack.separator import brute_min_cut, build_separator, min_cut_separator, ring_separator, verify_separator
from cpack.treecover import TreeCover, build_tree_cover, check_cover
from cpack.wspd import build_wspd, euclidean_dist_fn, matrix_dist_fn, verify_wspd


@pytest.fixture
def verdict(capsys):
    def report(num: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance {num}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return report


def random_connected(seed: int, n: int) -> GeometricGraph:
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2)) * 4
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    for _ in range(n):
        u, v = sorted(rng.integers(0, n, 2).tolist())
        if u != v:
            edges.add((u, v))
    return GeometricGraph.from_edges(pts, sorted(edges))


def test_1_edo_exact(verdict, family_cache):
    t0 = time.perf_counter()
    cases = [("path", 300), ("star", 299), ("spiral", 300)] + [("grid", k * k) for k in range(6, 13)]
    worst, bad = 0.0, []
    for kind, n in cases:
        g, c, D = family_cache(kind, n, 0)
        fw = floyd_warshall(g)
        h = build_hierarchy(g, c)
        Q = np.array([[h.distance(u, v) for v in range(g.n)] for u in range(g.n)])
        for ref in (D, fw):
            off = ref > 0
            rel = np.abs(Q[off] - ref[off]) / ref[off]
            worst = max(worst, float(rel.max()))
            if rel.max() > 1e-9 or np.any(Q[~off] != 0):
                bad.append(f"{kind}-{g.n}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60
    verdict(1, ok, f"{len(cases)} graphs, max rel error {worst:.2e}, {elapsed:.1f}s, mismatches {bad}")


def test_2_wspd_correct(verdict, family_cache):
    problems, checks = [], 0
    for kind, n in [("path", 200), ("grid", 196), ("star", 199), ("spiral", 200)]:
        g, c, D = family_cache(kind, n, 0)
        t = build_cct(g, c, check_c=False)
        for sigma in (2.0, 4.0, 8.0):
            w = build_wspd(t, sigma, "graph", matrix_dist_fn(D))
            rep = verify_wspd(w, D, max_n=200)
            checks += rep.pairs_checked
            problems += [f"{kind} sigma={sigma:g}: {p}" for p in rep.problems]
    verdict(2, not problems, f"{checks} vertex pairs checked, {len(problems)} violations {problems[:3]}")


def test_3_wspd_linear_size(verdict):
    ratios = []
    for n in (64, 128, 256, 512):
        g, c = generate_family("path", n)
        t = build_cct(g, c)
        w = build_wspd(t, 4.0, "euclidean", euclidean_dist_fn(g.coords))
        ratios.append(len(w) / n)
    spread = max(ratios) / min(ratios)
    verdict(3, spread < 2, f"|pairs|/n = {[round(r, 2) for r in ratios]}, spread {spread:.3f} (< 2 required)")


def test_4_separator(verdict):
    problems, brute_runs = [], 0
    for kind, n in [("path", 200), ("grid", 196), ("star", 60), ("spiral", 200), ("grid", 36)]:
        g, c = generate_family(kind, n)
        c_hat = max(c, estimate_packedness(g, CHECK_BUDGET))
        res = build_separator(g, c)
        problems += [f"{kind}: {p}" for p in verify_separator(g, res)]
        if len(res.C) > 2 * c_hat:
            problems.append(f"{kind}: |C|={len(res.C)} > 2c={2 * c_hat:g}")
        if min(len(res.A), len(res.B)) < res.beta_achieved * g.n - len(res.C):
            problems.append(f"{kind}: balance")
    for seed in range(60):
        g = random_connected(seed, 4 + seed % 11)
        ring = ring_separator(g)
        res = min_cut_separator(g, ring)
        problems += [f"random {seed}: {p}" for p in verify_separator(g, res)]
        bf = brute_min_cut(g, ring)
        brute_runs += 1
        if bf != res.flow:
            problems.append(f"random {seed}: flow {res.flow} != brute {bf}")
    verdict(4, not problems, f"5 family builds, {brute_runs} brute-force cuts, {len(problems)} violations {problems[:3]}")


def test_5_cct_valid(verdict, family_cache):
    problems, nodes = [], 0
    for kind, n in [("path", 200), ("grid", 196), ("star", 199), ("spiral", 200)]:
        g, c, D = family_cache(kind, n, 0)
        t = build_cct(g, c, check_c=False)
        nodes += len(t.nodes)
        problems += [f"{kind}: {p}" for p in check_cct(t, D)]
    verdict(5, not problems, f"{nodes} tree nodes checked, {len(problems)} violations {problems[:3]}")


def test_6_ado_distortion(verdict, family_cache):
    t0 = time.perf_counter()
    problems, worst = [], 0.0
    for kind, n in [("path", 100), ("grid", 100), ("star", 99), ("spiral", 100)]:
        g, c, D = family_cache(kind, n, 0)
        t = build_cct(g, c, check_c=False)
        for eps in (0.5, 0.9):
            cover = build_tree_cover(g, eps, c, t=t)
            problems += [f"{kind} eps={eps}: {p}" for p in check_cover(cover, D, t)]
            A = cover.all_pairs()
            off = ~np.eye(g.n, dtype=bool)
            worst = max(worst, float((A[off] / D[off]).max()))
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 120
    verdict(6, ok, f"max answer/d_G {worst:.4f}, {elapsed:.1f}s, {len(problems)} violations {problems[:3]}")


def test_7_tree_count_constant(verdict):
    counts = []
    for n in (64, 128, 256):
        g, c = generate_family("path", n)
        counts.append(len(build_tree_cover(g, 0.9, c).trees))
    verdict(7, len(set(counts)) == 1, f"eps=0.9 tree counts for n=64,128,256: {counts} (constant required)")


def test_8_edo_space(verdict):
    ratios = []
    for n in (64, 128, 256, 512):
        g, c = generate_family("path", n)
        ratios.append(build_hierarchy(g, c).spt_entries() / (n * math.log2(n)))
    spread = max(ratios) / min(ratios)
    verdict(8, spread < 2 and max(ratios) < 2, f"spt/(n log2 n) = {[round(r, 3) for r in ratios]}, spread {spread:.3f}")


def test_9_determinism_roundtrip(verdict):
    problems = []
    for kind, n in [("spiral", 120), ("grid", 64)]:
        g1, c = generate_family(kind, n, 7)
        g2, _ = generate_family(kind, n, 7)
        if format_graph(g1) != format_graph(g2):
            problems.append(f"{kind}: generator not reproducible")
        h = build_hierarchy(g1, c)
        if build_hierarchy(g2, c).dumps() != h.dumps():
            problems.append(f"{kind}: edo rebuild differs")
        back = SeparatorHierarchy.from_dict(json.loads(h.dumps()))
        if back.dumps() != h.dumps():
            problems.append(f"{kind}: edo reload differs")
        if any(fmt(back.distance(u, v)) != fmt(h.distance(u, v)) for u in range(g1.n) for v in range(g1.n)):
            problems.append(f"{kind}: edo query differs after reload")
    g, c = generate_family("path", 30, 7)
    cover = build_tree_cover(g, 0.9, c)
    if build_tree_cover(g, 0.9, c).dumps() != cover.dumps():
        problems.append("ado rebuild differs")
    back = TreeCover.from_dict(json.loads(cover.dumps()))
    if back.dumps() != cover.dumps():
        problems.append("ado reload differs")
    if any(fmt(back.query(u, v)) != fmt(cover.query(u, v)) for u in range(g.n) for v in range(g.n)):
        problems.append("ado query differs after reload")
    verdict(9, not problems, f"2 EDO + 1 ADO round trips, {len(problems)} differences {problems}")


def test_10_mutation_sensitivity(verdict):
    seeded = caught = 0
    for kind, n in [("path", 24), ("spiral", 40), ("spiral", 80)]:
        g, c = generate_family(kind, n)
        D = all_pairs(g)
        t = build_cct(g, c, check_c=False)
        w = build_wspd(t, 2.0, "graph", matrix_dist_fn(D))
        for kind_m in ("drop-pair", "duplicate-pair", "dub-low"):
            seeded += 1
            caught += not verify_wspd(mutate_wspd(w, kind_m, D), D).ok
        seeded += 1
        caught += bool(verify_separator(g, mutate_separator(g, build_separator(g, c))))
    for kind_m in MUTATIONS:
        seeded += 1
        caught += not run_selftest(40, mutate=kind_m, log=lambda _: None).ok
    verdict(10, caught == seeded, f"{caught}/{seeded} seeded corruptions detected")
