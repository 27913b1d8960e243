"""Invariant suites over generated families, plus a mutation check of the verifiers."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .cct import build_cct, check_cct
from .edo import build_hierarchy
from .geom import build_compressed_quadtree
from .graph import all_pairs, floyd_warshall, generate_family
from .separator import SeparatorResult, brute_min_cut, build_separator, verify_separator
from .treecover import build_tree_cover, check_cover
from .wspd import build_wspd, matrix_dist_fn, verify_wspd

MUTATIONS = ("drop-pair", "duplicate-pair", "dub-low", "ab-edge")


@dataclass
class SuiteReport:
    failures: list[str] = field(default_factory=list)
    checks: int = 0

    def add(self, label: str, problems: list[str]) -> None:
        self.checks += 1
        self.failures.extend(f"{label}: {p}" for p in problems[:5])

    @property
    def ok(self) -> bool:
        return not self.failures


def mutate_wspd(w, kind: str, dist: np.ndarray):
    """Copy of ``w`` with one seeded corruption."""
    pairs = list(w.pairs)
    out = replace(w, pairs=pairs)
    if kind == "drop-pair":
        del pairs[len(pairs) // 2]
    elif kind == "duplicate-pair":
        pairs.append(pairs[len(pairs) // 2])
    elif kind == "dub-low":
        # the pair whose side has the largest true diameter, dub set below it
        best, bi, side = -1.0, -1, "dub_a"
        for i, p in enumerate(pairs):
            for attr, node in (("dub_a", p.a), ("dub_b", p.b)):
                mem = w.tree.members(node)
                diam = float(dist[np.ix_(mem, mem)].max())
                if diam > best:
                    best, bi, side = diam, i, attr
        if best <= 0:
            raise ValueError("no pair with a non-trivial side to corrupt")
        pairs[bi] = replace(pairs[bi], **{side: 0.5 * best})
    else:
        raise ValueError(f"not a WSPD mutation: {kind}")
    return out


def mutate_separator(g, res: SeparatorResult) -> SeparatorResult:
    """Move one separator vertex with neighbours on both sides into A."""
    label = np.zeros(g.n, dtype=np.int64)
    label[res.B] = 1
    label[res.C] = 2
    for v in res.C.tolist():
        nbrs = [u for u, _ in g.adjacency[v]]
        if any(label[u] == 1 for u in nbrs):
            C = res.C[res.C != v]
            return replace(res, C=C, A=np.sort(np.append(res.A, v)))
    # fall back to moving a B vertex adjacent to A
    for u, v in g.edges.tolist():
        for x, y in ((u, v), (v, u)):
            if label[x] == 0 and label[y] == 1:
                return replace(res, A=np.sort(np.append(res.A, y)), B=res.B[res.B != y])
    raise ValueError("no corruption available")


def run_selftest(max_n: int = 200, mutate: str | None = None, seed: int = 0, log=print) -> SuiteReport:
    """Run every invariant suite on families with n <= max_n.

    ``mutate`` seeds one corruption into the structures before they are checked,
    in which case a healthy suite must report failures.
    """
    if mutate is not None and mutate not in MUTATIONS:
        raise ValueError(f"mutation must be one of {MUTATIONS}")
    rep = SuiteReport()
    sizes = {"path": min(max_n, 64), "grid": min(max_n, 49), "star": min(max_n, 12), "spiral": min(max_n, 80)}
    for kind, n in sizes.items():
        if n < 4:
            continue
        g, c = generate_family(kind, n, seed)
        label = f"{kind}-{g.n}"
        D = all_pairs(g)
        rep.add(f"{label} all_pairs vs floyd_warshall", [] if np.allclose(D, floyd_warshall(g), rtol=1e-9, atol=0) else ["mismatch"])
        rep.add(f"{label} quadtree", build_compressed_quadtree(g.normalized()[0].coords).check_invariants())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t = build_cct(g, c)
        rep.add(f"{label} cct", check_cct(t, D))
        for sigma in (2.0, 4.0):
            w = build_wspd(t, sigma, "graph", matrix_dist_fn(D))
            if mutate in ("drop-pair", "duplicate-pair", "dub-low"):
                try:
                    w = mutate_wspd(w, mutate, D)
                except ValueError:
                    pass  # nothing to corrupt here (all sides are single vertices)
            rep.add(f"{label} wspd sigma={sigma:g}", verify_wspd(w, D, max_n=max(500, max_n)).problems)
        res = build_separator(g, c)
        if mutate == "ab-edge":
            res = mutate_separator(g, res)
        rep.add(f"{label} separator", verify_separator(g, res))
        if len(res.ring.middle) <= 14:
            bf = brute_min_cut(g, res.ring)
            rep.add(f"{label} min cut", [] if bf == res.flow else [f"flow {res.flow} != brute {bf}"])
        h = build_hierarchy(g, c)
        rep.add(f"{label} edo invariants", h.check_invariants(g))
        M = h.distance_matrix()
        rep.add(f"{label} edo exact", [] if np.allclose(M, D, rtol=1e-9, atol=0) else ["distance mismatch"])
        if g.n <= 40:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cov = build_tree_cover(g, 0.9, c, edo=h, t=t)
            rep.add(f"{label} tree cover", check_cover(cov, D, t))
        log(f"{label}: {'ok' if rep.ok else 'FAIL'}")
    if mutate is None:
        # the verifiers themselves must notice seeded corruptions
        g, c = generate_family("path", min(max_n, 24), seed)
        D = all_pairs(g)
        t = build_cct(g, c, check_c=False)
        w = build_wspd(t, 4.0, "graph", matrix_dist_fn(D))
        for kind in ("drop-pair", "duplicate-pair", "dub-low"):
            caught = not verify_wspd(mutate_wspd(w, kind, D), D).ok
            rep.add(f"mutation {kind}", [] if caught else ["corruption not detected"])
        bad = mutate_separator(g, build_separator(g, c))
        rep.add("mutation ab-edge", [] if verify_separator(g, bad) else ["corruption not detected"])
        log(f"mutation suite: {'ok' if rep.ok else 'FAIL'}")
    return rep

