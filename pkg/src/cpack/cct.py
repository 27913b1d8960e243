"""Relevant-length index, diameter upper bounds and the c-connected tree."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geom import (
    AffineTransform,
    CompressedQuadtree,
    Cube,
    build_compressed_quadtree,
    canonical_neighbors,
)
from .graph import CHECK_BUDGET, GeometricGraph, estimate_packedness


class RelLengthIndex:
    """Map from canonical cubes to the clipped length of their relevant edges.

    An edge e is relevant to s when len(e) <= 2 * diam(s). For every edge the
    clipped length is stored directly at each level where it is relevant, up to
    ``max_level``; there is no summation across levels, so a query agrees with a
    fresh scan for every cube at level <= ``max_level``.
    """

    def __init__(self, g: GeometricGraph, max_level: int):
        self.dim = g.dim
        self.max_level = max_level
        self.p = g.coords[g.edges[:, 0]] if g.m else np.zeros((0, g.dim))
        self.q = g.coords[g.edges[:, 1]] if g.m else np.zeros((0, g.dim))
        self.lengths = g.lengths
        self.table: dict[tuple[int, tuple[int, ...]], float] = {}
        root_d = math.sqrt(self.dim)
        for i, length in enumerate(self.lengths.tolist()):
            lo = np.minimum(self.p[i], self.q[i])
            hi = np.maximum(self.p[i], self.q[i])
            top = min(max_level, finest_relevant_level(length, self.dim))
            for level in range(top + 1):
                scale = float(1 << level)
                first = np.maximum(np.ceil(lo * scale).astype(np.int64) - 1, 0)
                last = np.minimum(np.floor(hi * scale).astype(np.int64), (1 << level) - 1)
                ranges = [range(a, b + 1) for a, b in zip(first.tolist(), last.tolist())]
                cells = np.array(np.meshgrid(*ranges, indexing="ij")).reshape(self.dim, -1).T
                side = 1.0 / scale
                for cell in cells.tolist():
                    cl = np.asarray(cell, dtype=float) * side
                    part = float(_kernels.clip_box(self.p[i : i + 1], self.q[i : i + 1], cl, cl + side)[0])
                    if part > 0.0:
                        key = (level, tuple(cell))
                        self.table[key] = self.table.get(key, 0.0) + part
            assert length <= 2.0 * root_d * math.ldexp(1.0, -top) * (1 + 1e-12)

    def rel(self, s: Cube) -> float:
        if s.level > self.max_level:
            raise ValueError(f"level {s.level} beyond indexed depth {self.max_level}")
        return self.table.get((s.level, s.cell), 0.0)

    def rel_brute(self, s: Cube) -> float:
        """Oracle: rescan every edge."""
        if len(self.lengths) == 0:
            return 0.0
        keep = self.lengths <= 2.0 * s.diam
        if not keep.any():
            return 0.0
        return float(_kernels.clip_box_numpy(self.p[keep], self.q[keep], s.lo, s.hi).sum())


def finest_relevant_level(length: float, dim: int) -> int:
    """Largest level i with length <= 2 * sqrt(dim) * 2**-i (at least 0)."""
    if not length > 0:
        raise ValueError("edge length must be positive")
    bound = 2.0 * math.sqrt(dim)
    i = max(0, math.floor(math.log2(bound / length)))
    while i > 0 and length > bound * math.ldexp(1.0, -i):
        i -= 1
    while length <= bound * math.ldexp(1.0, -(i + 1)):
        i += 1
    return i


def build_rel_index(g: GeometricGraph, q: CompressedQuadtree) -> RelLengthIndex:
    return RelLengthIndex(g, max(q.levels()))


def dub(index: RelLengthIndex, s: Cube) -> float:
    """rel(s) plus rel over its canonical neighbours."""
    return index.rel(s) + sum(index.rel(t) for t in canonical_neighbors(s))


@dataclass
class CCTNode:
    cube: Cube
    rep: int
    dub: float
    parent: int = -1
    children: list[int] = field(default_factory=list)
    leaf_vertex: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.leaf_vertex >= 0


@dataclass
class CCTree:
    """c-connected tree. ``dub`` values are in input units; cubes live in the normalized frame."""

    nodes: list[CCTNode]
    root: int
    leaf_of: np.ndarray
    transform: AffineTransform
    c: float

    @property
    def n(self) -> int:
        return len(self.leaf_of)

    def members(self, u: int) -> np.ndarray:
        out = []
        stack = [u]
        while stack:
            v = stack.pop()
            nd = self.nodes[v]
            if nd.is_leaf:
                out.append(nd.leaf_vertex)
            stack.extend(nd.children)
        return np.sort(np.asarray(out, dtype=np.int64))

    def diam_input_units(self, u: int) -> float:
        return self.nodes[u].cube.diam / self.transform.scale

    def depth_first(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.nodes[v].children))
        return out

    def reps_per_cube(self) -> dict[tuple[int, tuple[int, ...]], int]:
        out: dict[tuple[int, tuple[int, ...]], int] = {}
        for nd in self.nodes:
            key = (nd.cube.level, nd.cube.cell)
            out[key] = out.get(key, 0) + 1
        return out


def build_cct(
    g: GeometricGraph,
    c: float,
    q: CompressedQuadtree | None = None,
    check_c: bool = True,
) -> CCTree:
    """Build the c-connected tree bottom-up over the compressed quadtree.

    At quadtree node u the classes coming up from its children are grouped by
    connectivity in G restricted to the closed doubled cube of u. Groups of two
    or more classes become a new node at u; a lone class passes through
    unchanged, so there are no single-child chains.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if not g.is_connected():
        labels = g.components()
        raise ValueError(f"graph is disconnected ({int(labels.max()) + 1} components)")
    if g.has_duplicate_points():
        raise ValueError("distinct vertices with identical coordinates are not supported")
    if check_c and g.m:
        est = estimate_packedness(g, sample_budget=CHECK_BUDGET)
        if c < est * (1 - 1e-9):
            warnings.warn(f"declared c={c:g} is below the packedness lower bound {est:.6g}", stacklevel=2)

    gn, tr = g.normalized()
    if q is None:
        q = build_compressed_quadtree(gn.coords)
    index = build_rel_index(gn, q)
    pts = gn.coords

    nodes: list[CCTNode] = []
    leaf_of = np.full(g.n, -1, dtype=np.int64)
    tops: dict[int, list[int]] = {}
    vert_of: dict[int, np.ndarray] = {}

    for u in q.postorder():
        qn = q.nodes[u]
        if qn.is_leaf:
            (p,) = qn.point_ids
            nodes.append(CCTNode(qn.cube, p, 0.0, leaf_vertex=p))
            leaf_of[p] = len(nodes) - 1
            tops[u] = [len(nodes) - 1]
            vert_of[len(nodes) - 1] = np.array([p], dtype=np.int64)
            continue
        classes = [t for ch in qn.children for t in tops.pop(ch)]
        lo, hi = qn.cube.expanded_bounds(2.0)
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        labels = gn.components(inside)
        groups: dict[int, list[int]] = {}
        for t in classes:
            lab = int(labels[vert_of[t][0]])
            assert lab >= 0
            groups.setdefault(lab, []).append(t)
        d_u = dub(index, qn.cube) / tr.scale
        out = []
        for lab in sorted(groups, key=lambda k: min(nodes[t].rep for t in groups[k])):
            members = groups[lab]
            if len(members) == 1:
                out.append(members[0])
                continue
            verts = np.sort(np.concatenate([vert_of.pop(t) for t in members]))
            nid = len(nodes)
            nodes.append(CCTNode(qn.cube, int(verts[0]), d_u, children=sorted(members, key=lambda t: nodes[t].rep)))
            for t in members:
                nodes[t].parent = nid
            vert_of[nid] = verts
            out.append(nid)
        tops[u] = out

    (root,) = tops[q.root]
    root_cube = q.nodes[q.root].cube
    if nodes[root].cube != root_cube:
        nodes[root].cube = root_cube
        if not nodes[root].is_leaf:
            nodes[root].dub = dub(index, root_cube) / tr.scale
    return CCTree(nodes, root, leaf_of, tr, float(c))


def check_cct(t: CCTree, dist: np.ndarray, c: float | None = None) -> list[str]:
    """Exhaustive validity check against a distance matrix."""
    c = t.c if c is None else c
    problems = []
    leaves = [i for i, nd in enumerate(t.nodes) if nd.is_leaf]
    if sorted(t.nodes[i].leaf_vertex for i in leaves) != list(range(t.n)):
        problems.append("leaves do not biject with vertices")
    for u, nd in enumerate(t.nodes):
        mem = t.members(u)
        if nd.rep != int(mem[0]):
            problems.append(f"node {u}: rep {nd.rep} is not the smallest member")
        sub = dist[np.ix_(mem, mem)]
        diam = float(sub.max())
        bound = c * t.diam_input_units(u)
        if diam > bound * (1 + 1e-9):
            problems.append(f"node {u}: member distance {diam:.6g} exceeds c*diam {bound:.6g}")
        if diam > nd.dub * (1 + 1e-9) + 1e-12:
            problems.append(f"node {u}: dub {nd.dub:.6g} below member diameter {diam:.6g}")
        if not nd.is_leaf and len(nd.children) < 2:
            problems.append(f"node {u}: internal node with {len(nd.children)} children")
    return problems
