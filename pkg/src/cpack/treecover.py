"""Dumbbells, grouping, dumbbell trees and the (1+eps) approximate distance oracle."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .cct import CCTree, build_cct
from .edo import SeparatorHierarchy, build_hierarchy
from .graph import GeometricGraph
from .lca import EulerLCA
from .wspd import Wspd, build_wspd, matrix_dist_fn

FORMAT = "ado-v1"

DUMBBELL, HEAD, LEAF = 0, 1, 2


def constants(epsilon: float) -> tuple[float, float, float]:
    """(sigma, gamma, gamma_prime) for a target distortion 1 + epsilon."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    sigma = 63.0 / epsilon
    gamma = 15.0 / sigma
    return sigma, gamma, gamma


@dataclass(frozen=True)
class Dumbbell:
    a: int  # CCT node of the first head
    b: int
    rep_a: int
    rep_b: int
    rad_a: float
    rad_b: float
    length: float


def make_dumbbells(w: Wspd, dist: np.ndarray) -> list[Dumbbell]:
    if w.flavor != "graph":
        raise ValueError("dumbbells need a graph-distance WSPD")
    nodes = w.tree.nodes
    out = []
    for p in w.pairs:
        ra, rb = nodes[p.a].rep, nodes[p.b].rep
        length = float(dist[ra, rb])
        if not length > 0:
            raise AssertionError(f"zero-length dumbbell ({ra},{rb})")
        cap = length / (w.sigma + 1) * (1 + 1e-12)
        if p.dub_a > cap or p.dub_b > cap:
            raise AssertionError(f"dumbbell ({ra},{rb}): head radius exceeds length/(sigma+1)")
        out.append(Dumbbell(p.a, p.b, ra, rb, p.dub_a, p.dub_b, length))
    return out


def length_buckets(lengths) -> np.ndarray:
    """floor(log2(l / l_min)) per length, computed exactly via frexp."""
    lens = np.asarray(lengths, dtype=float)
    ratio = lens / lens.min()
    _, exp = np.frexp(ratio)  # ratio = m * 2**exp, m in [0.5, 1)
    return (exp - 1).astype(np.int64)


def group_period(sigma: float) -> int:
    return math.ceil(math.log2(sigma)) + 1


def length_group(lengths, sigma: float) -> np.ndarray:
    if len(lengths) == 0:
        raise ValueError("need at least one dumbbell")
    return length_buckets(lengths) % group_period(sigma)


def head_distance(dist: np.ndarray, x: Dumbbell, y: Dumbbell) -> float:
    best = math.inf
    for rx, sx in ((x.rep_a, x.rad_a), (x.rep_b, x.rad_b)):
        for ry, sy in ((y.rep_a, y.rad_a), (y.rep_b, y.rad_b)):
            best = min(best, max(0.0, float(dist[rx, ry]) - sx - sy))
    return best


def _head_distance_matrix(dist: np.ndarray, dbs: list[Dumbbell]) -> np.ndarray:
    reps = np.array([[d.rep_a, d.rep_b] for d in dbs], dtype=np.int64).reshape(-1, 2)
    rads = np.array([[d.rad_a, d.rad_b] for d in dbs], dtype=float).reshape(-1, 2)
    best = np.full((len(dbs), len(dbs)), np.inf)
    for i in range(2):
        for j in range(2):
            hd = dist[np.ix_(reps[:, i], reps[:, j])] - rads[:, i, None] - rads[None, :, j]
            best = np.minimum(best, np.maximum(hd, 0.0))
    return best


def empty_region_partition(dbs: list[Dumbbell], ids: np.ndarray, ell: float, gamma: float, dist: np.ndarray) -> np.ndarray:
    """Greedy colouring (in increasing id order) of the conflict graph of one length class.

    Two dumbbells conflict when some pair of their heads is within 2 * gamma * ell.
    """
    sub = [dbs[i] for i in ids]
    adj = _head_distance_matrix(dist, sub) <= 2.0 * gamma * ell
    np.fill_diagonal(adj, False)
    return _kernels.greedy_color(adj)


@dataclass
class DumbbellTree:
    parent: np.ndarray
    rep: np.ndarray
    kind: np.ndarray
    weight: np.ndarray  # d_G(rep, rep(parent)); 0 at the root
    leaf_of: np.ndarray  # vertex -> leaf node
    head_set: np.ndarray  # CCT node of head nodes (-1 elsewhere, -2 for the dummy copy)
    dumbbells: np.ndarray  # dumbbell ids of this tree (D_0 excluded)

    def __post_init__(self):
        children: list[list[int]] = [[] for _ in range(len(self.parent))]
        for v, p in enumerate(self.parent.tolist()):
            if p >= 0:
                children[p].append(v)
        self.lca = EulerLCA(children, 0)
        order = np.argsort(self.lca.depth, kind="stable")
        wd = np.zeros(len(self.parent))
        for v in order.tolist():
            if self.parent[v] >= 0:
                wd[v] = wd[self.parent[v]] + self.weight[v]
        self.wdepth = wd

    @property
    def size(self) -> int:
        return len(self.parent)

    def path_length(self, p: int, q: int) -> float:
        if p == q:
            return 0.0
        u, v = int(self.leaf_of[p]), int(self.leaf_of[q])
        w = self.lca.query(u, v)
        return float(self.wdepth[u] + self.wdepth[v] - 2.0 * self.wdepth[w])

    def all_path_lengths(self) -> np.ndarray:
        n = len(self.leaf_of)
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        u = self.leaf_of[ii.ravel()]
        v = self.leaf_of[jj.ravel()]
        w = self.lca.query_many(u, v)
        out = (self.wdepth[u] + self.wdepth[v] - 2.0 * self.wdepth[w]).reshape(n, n)
        np.fill_diagonal(out, 0.0)
        return out

    def to_dict(self) -> dict:
        return {
            "parent": self.parent.tolist(),
            "rep": self.rep.tolist(),
            "kind": self.kind.tolist(),
            "weight": self.weight.tolist(),
            "leaf_of": self.leaf_of.tolist(),
            "head_set": self.head_set.tolist(),
            "dumbbells": self.dumbbells.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DumbbellTree":
        return cls(
            np.asarray(d["parent"], dtype=np.int64),
            np.asarray(d["rep"], dtype=np.int64),
            np.asarray(d["kind"], dtype=np.int64),
            np.asarray(d["weight"], dtype=float),
            np.asarray(d["leaf_of"], dtype=np.int64),
            np.asarray(d["head_set"], dtype=np.int64),
            np.asarray(d["dumbbells"], dtype=np.int64),
        )


def build_dumbbell_tree(
    subset,
    dbs: list[Dumbbell],
    t: CCTree,
    dist: np.ndarray,
    gamma_prime: float,
    sigma: float,
    gamma: float | None = None,
) -> DumbbellTree:
    """Dumbbell tree for ``subset`` (ids into ``dbs``) under the dummy root dumbbell."""
    gamma = gamma_prime if gamma is None else gamma
    assert gamma_prime <= gamma and sigma * gamma >= 2 * gamma_prime + (sigma + 3) / (sigma + 1)
    subset = np.asarray(sorted(int(i) for i in subset), dtype=np.int64)
    n = t.n
    # node layout: 0 = D_0, 1 = head_0, 2 = translated copy, then 3 nodes per dumbbell, then leaves
    k = len(subset)
    size = 3 + 3 * k + n
    parent = np.full(size, -1, dtype=np.int64)
    rep = np.zeros(size, dtype=np.int64)
    kind = np.full(size, HEAD, dtype=np.int64)
    head_set = np.full(size, -1, dtype=np.int64)
    kind[0] = DUMBBELL
    parent[1] = parent[2] = 0
    rep[:3] = 0  # D_0 is centred at the smallest vertex id
    head_set[1] = t.root
    head_set[2] = -2

    for j, did in enumerate(subset.tolist()):
        d = dbs[did]
        base = 3 + 3 * j
        kind[base] = DUMBBELL
        rep[base] = min(d.rep_a, d.rep_b)
        rep[base + 1], rep[base + 2] = d.rep_a, d.rep_b
        head_set[base + 1], head_set[base + 2] = d.a, d.b
        parent[base + 1] = parent[base + 2] = base

    if k:
        sub = [dbs[i] for i in subset.tolist()]
        lens = np.array([d.length for d in sub])
        hd = _head_distance_matrix(dist, sub)
        for j, d in enumerate(sub):
            ell = d.length
            cand = np.flatnonzero((lens > ell) & (hd[j] <= gamma_prime * ell))
            base = 3 + 3 * j
            if len(cand) == 0:
                parent[base] = 1  # D_0's head_0 always qualifies
                continue
            best = lens[cand].min()
            tied = cand[lens[cand] == best]
            if len(tied) > 1:
                ids = [int(subset[x]) for x in tied]
                raise AssertionError(f"dumbbell {int(subset[j])}: non-unique parent candidates {ids}")
            pj = int(tied[0])
            other = sub[pj]
            # attach under the closer head of the parent dumbbell (first head on ties)
            da = min(max(0.0, dist[r, other.rep_a] - s - other.rad_a) for r, s in ((d.rep_a, d.rad_a), (d.rep_b, d.rad_b)))
            db = min(max(0.0, dist[r, other.rep_b] - s - other.rad_b) for r, s in ((d.rep_a, d.rad_a), (d.rep_b, d.rad_b)))
            parent[base] = 3 + 3 * pj + (1 if da <= db else 2)

    # leaves: deepest CCT ancestor whose set is a head set in this tree
    # for a head set shared by several dumbbells the shortest (then lowest id) wins
    owner: dict[int, int] = {t.root: 1}
    for j in sorted(range(k), key=lambda j: (dbs[int(subset[j])].length, int(subset[j])), reverse=True):
        d = dbs[int(subset[j])]
        owner[d.a] = 3 + 3 * j + 1
        owner[d.b] = 3 + 3 * j + 2
    leaf_of = np.zeros(n, dtype=np.int64)
    for p in range(n):
        u = int(t.leaf_of[p])
        while u not in owner:
            u = t.nodes[u].parent
        node = 3 + 3 * k + p
        kind[node] = LEAF
        rep[node] = p
        parent[node] = owner[u]
        leaf_of[p] = node

    weight = np.zeros(size)
    has = parent >= 0
    weight[has] = dist[rep[has], rep[parent[has]]]
    return DumbbellTree(parent, rep, kind, weight, leaf_of, head_set, subset)


@dataclass
class TreeCover:
    epsilon: float
    sigma: float
    gamma: float
    trees: list[DumbbellTree]
    edo: SeparatorHierarchy
    dumbbells: list[Dumbbell] | None = None
    groups: np.ndarray | None = None
    colors: np.ndarray | None = None
    buckets: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.edo.n

    def query(self, p: int, q: int) -> float:
        if not (0 <= p < self.n and 0 <= q < self.n):
            raise KeyError(f"unknown vertex id in ({p}, {q})")
        if p == q:
            return 0.0
        return min(tr.path_length(p, q) for tr in self.trees)

    def all_pairs(self) -> np.ndarray:
        out = np.full((self.n, self.n), np.inf)
        for tr in self.trees:
            np.minimum(out, tr.all_path_lengths(), out=out)
        return out

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": FORMAT,
            "epsilon": self.epsilon,
            "sigma": self.sigma,
            "gamma": self.gamma,
            "trees": [tr.to_dict() for tr in self.trees],
            "edo": self.edo.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeCover":
        if data.get("version") != FORMAT:
            raise ValueError(f"expected version {FORMAT!r}, got {data.get('version')!r}")
        return cls(
            float(data["epsilon"]),
            float(data["sigma"]),
            float(data["gamma"]),
            [DumbbellTree.from_dict(t) for t in data["trees"]],
            SeparatorHierarchy.from_dict(data["edo"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "TreeCover":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_tree_cover(
    g: GeometricGraph,
    epsilon: float,
    c: float,
    edo: SeparatorHierarchy | None = None,
    t: CCTree | None = None,
) -> TreeCover:
    sigma, gamma, gamma_prime = constants(epsilon)
    if edo is None:
        edo = build_hierarchy(g, c)
    dist = edo.distance_matrix()
    if t is None:
        t = build_cct(g, c)
    w = build_wspd(t, sigma, "graph", matrix_dist_fn(dist))
    dbs = make_dumbbells(w, dist)
    lens = np.array([d.length for d in dbs])
    buckets = length_buckets(lens)
    groups = buckets % group_period(sigma)
    lmin = lens.min()
    colors = np.zeros(len(dbs), dtype=np.int64)
    for b in np.unique(buckets).tolist():
        ids = np.flatnonzero(buckets == b)
        colors[ids] = empty_region_partition(dbs, ids, lmin * 2.0**b, gamma, dist)
    trees = []
    for grp in range(group_period(sigma)):
        in_group = groups == grp
        if not in_group.any():
            continue
        for col in range(int(colors[in_group].max()) + 1):
            subset = np.flatnonzero(in_group & (colors == col))
            trees.append(build_dumbbell_tree(subset, dbs, t, dist, gamma_prime, sigma, gamma))
    return TreeCover(epsilon, sigma, gamma, trees, edo, dbs, groups, colors, buckets)


def check_cover(cover: TreeCover, dist: np.ndarray, t: CCTree | None = None) -> list[str]:
    """Exhaustive structural and distortion checks on a built cover."""
    problems: list[str] = []
    n = cover.n
    best = np.full((n, n), np.inf)
    for idx, tr in enumerate(cover.trees):
        leaves = tr.leaf_of
        if sorted(tr.rep[tr.kind == LEAF].tolist()) != list(range(n)) or len(set(leaves.tolist())) != n:
            problems.append(f"tree {idx}: leaves do not biject with V")
        paths = tr.all_path_lengths()
        low = paths < dist * (1 - 1e-9) - 1e-12
        if low.any():
            i, j = np.argwhere(low)[0]
            problems.append(f"tree {idx}: path ({i},{j}) shorter than d_G")
        np.minimum(best, paths, out=best)
        if t is not None:
            for v in np.flatnonzero(tr.head_set >= 0).tolist():
                mem = t.members(int(tr.head_set[v]))
                for p in mem.tolist():
                    if v not in tr.lca.ancestors(int(leaves[p])):
                        problems.append(f"tree {idx}: head node {v} is not an ancestor of leaf {p}")
                        break
    off = ~np.eye(n, dtype=bool)
    over = off & (best > (1 + cover.epsilon) * dist * (1 + 1e-12))
    if over.any():
        i, j = np.argwhere(over)[0]
        problems.append(f"pair ({i},{j}): {best[i, j]:.6g} exceeds (1+eps) * {dist[i, j]:.6g}")
    return problems


def check_groups(cover: TreeCover, dist: np.ndarray) -> list[str]:
    """Length-grouping and empty-region properties of every tree's source subset."""
    problems = []
    dbs = cover.dumbbells
    lmin = min(d.length for d in dbs)
    for idx, tr in enumerate(cover.trees):
        ids = tr.dumbbells
        lens = np.array([dbs[i].length for i in ids])
        for x in range(len(ids)):
            for y in range(len(ids)):
                lo, hi = lens[x], lens[y]
                if lo <= hi and not (hi <= 2 * lo or hi >= cover.sigma * lo):
                    problems.append(f"tree {idx}: lengths {lo:g}, {hi:g} break the grouping dichotomy")
        bk = cover.buckets[ids]
        for b in np.unique(bk).tolist():
            same = ids[bk == b]
            hd = _head_distance_matrix(dist, [dbs[i] for i in same])
            np.fill_diagonal(hd, np.inf)
            ell = lmin * 2.0**b
            if np.any(hd <= cover.gamma * ell):
                problems.append(f"tree {idx}: empty-region violated in length class {b}")
    return problems
