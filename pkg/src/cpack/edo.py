"""Exact distance oracle over a recursive separator hierarchy."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as sp_dijkstra

from .graph import GeometricGraph, component_labels, induced_subgraph
from .lca import EulerLCA
from .separator import DEFAULT_BETA, build_separator

FORMAT = "edo-v1"
DEFAULT_N0 = 8


@dataclass
class HierarchyNode:
    verts: np.ndarray  # sorted global ids of the node's subgraph
    sep: np.ndarray  # separator ids (empty at leaves and at component splits)
    spt: np.ndarray  # |sep| x |verts| distances within the subgraph, inf = absent
    children: list[int] = field(default_factory=list)
    leaf_table: np.ndarray | None = None  # all-pairs table at leaves
    parent: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.leaf_table is not None

    def local(self, v: int) -> int:
        i = int(np.searchsorted(self.verts, v))
        assert self.verts[i] == v
        return i


@dataclass(frozen=True)
class EdoAnswer:
    distance: float
    witness: int  # separator vertex realising the minimum, -1 for leaf tables and u == v
    level_node: int  # hierarchy node that supplied the minimum


def _sub_distances(sub: GeometricGraph, sources) -> np.ndarray:
    k = sub.n
    if sub.m:
        e = sub.edges
        w = np.concatenate([sub.lengths, sub.lengths])
        mat = csr_matrix((w, (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))), shape=(k, k))
    else:
        mat = csr_matrix((k, k))
    return np.atleast_2d(sp_dijkstra(mat, directed=False, indices=sources))


def _balanced_bins(groups: list[np.ndarray]) -> list[np.ndarray]:
    """Greedy two-way split of vertex groups by size (largest first)."""
    if len(groups) == 1:
        return [groups[0]]
    bins: list[list[np.ndarray]] = [[], []]
    size = [0, 0]
    for grp in sorted(groups, key=lambda x: (-len(x), int(x[0]))):
        j = 0 if size[0] <= size[1] else 1
        bins[j].append(grp)
        size[j] += len(grp)
    return [np.sort(np.concatenate(b)) for b in bins if b]


class SeparatorHierarchy:
    def __init__(self, n: int, nodes: list[HierarchyNode], home: np.ndarray, n0: int):
        self.n = n
        self.nodes = nodes
        self.home = home
        self.n0 = n0
        self.lca = EulerLCA([nd.children for nd in nodes], 0)
        self._anc = [self.lca.ancestors(i) for i in range(len(nodes))]
        self._pos = [{v: i for i, v in enumerate(nd.verts.tolist())} for nd in nodes]
        self._sep_rows = [nd.spt.tolist() for nd in nodes]
        self._sep_ids = [nd.sep.tolist() for nd in nodes]

    # -- construction -----------------------------------------------------

    @classmethod
    def build(cls, g: GeometricGraph, c: float | None = None, n0: int = DEFAULT_N0, beta: float = DEFAULT_BETA):
        if n0 < 1:
            raise ValueError("n0 must be >= 1")
        if not g.is_connected():
            raise ValueError("graph must be connected")
        nodes: list[HierarchyNode] = []
        home = np.full(g.n, -1, dtype=np.int64)
        stack = [(np.arange(g.n, dtype=np.int64), -1)]
        while stack:
            verts, parent = stack.pop()
            nid = len(nodes)
            if parent >= 0:
                nodes[parent].children.append(nid)
            sub = induced_subgraph(g, verts)
            if len(verts) <= n0:
                table = _sub_distances(sub, np.arange(len(verts)))
                nodes.append(HierarchyNode(verts, np.zeros(0, dtype=np.int64), np.zeros((0, len(verts))), [], table, parent))
                home[verts] = nid
                continue
            labels = component_labels(sub.n, sub.edges)
            if labels.max() > 0:
                sep_local = np.zeros(0, dtype=np.int64)
                rest = [verts[labels == k] for k in range(int(labels.max()) + 1)]
            else:
                res = build_separator(sub, c, beta)
                sep_local = res.C
                keep = np.ones(len(verts), dtype=bool)
                keep[sep_local] = False
                lab = component_labels(sub.n, sub.edges, keep)
                rest = [verts[lab == k] for k in range(int(lab.max()) + 1)]
            spt = _sub_distances(sub, sep_local) if len(sep_local) else np.zeros((0, len(verts)))
            nodes.append(HierarchyNode(verts, verts[sep_local], spt, [], None, parent))
            home[verts[sep_local]] = nid
            # push in reverse so children are numbered in bin order
            for part in reversed(_balanced_bins(rest) if rest else []):
                stack.append((part, nid))
        # children were appended in pop order; restore bin order
        for nd in nodes:
            nd.children.sort()
        assert np.all(home >= 0)
        return cls(g.n, nodes, home, n0)

    # -- queries ----------------------------------------------------------

    def query(self, u: int, v: int) -> EdoAnswer:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise KeyError(f"unknown vertex id in ({u}, {v})")
        if u == v:
            return EdoAnswer(0.0, -1, int(self.home[u]))
        s = self.lca.query(int(self.home[u]), int(self.home[v]))
        best, wit, at = math.inf, -1, -1
        nd = self.nodes[s]
        if nd.is_leaf:
            pos = self._pos[s]
            best, at = float(nd.leaf_table[pos[u], pos[v]]), s
        for a in self._anc[s]:
            rows = self._sep_rows[a]
            if not rows:
                continue
            pos = self._pos[a]
            iu, iv = pos[u], pos[v]
            for t, row in zip(self._sep_ids[a], rows):
                d = row[iu] + row[iv]
                if d < best:
                    best, wit, at = d, t, a
        return EdoAnswer(best, wit, at)

    def distance(self, u: int, v: int) -> float:
        return self.query(u, v).distance

    def distance_matrix(self) -> np.ndarray:
        out = np.full((self.n, self.n), np.inf)
        np.fill_diagonal(out, 0.0)
        for nd in self.nodes:
            idx = np.ix_(nd.verts, nd.verts)
            if nd.is_leaf:
                out[idx] = np.minimum(out[idx], nd.leaf_table)
            if len(nd.sep):
                via = (nd.spt[:, :, None] + nd.spt[:, None, :]).min(axis=0)
                out[idx] = np.minimum(out[idx], via)
        return out

    # -- diagnostics ------------------------------------------------------

    def height(self) -> int:
        return int(self.lca.depth.max())

    def spt_entries(self) -> int:
        return int(sum(np.isfinite(nd.spt).sum() for nd in self.nodes))

    def leaf_entries(self) -> int:
        return int(sum(np.isfinite(nd.leaf_table).sum() for nd in self.nodes if nd.is_leaf))

    def space(self) -> int:
        return self.spt_entries() + self.leaf_entries()

    def max_separator(self) -> int:
        return max((len(nd.sep) for nd in self.nodes), default=0)

    def check_invariants(self, g: GeometricGraph) -> list[str]:
        problems = []
        owner = np.zeros(self.n, dtype=np.int64)
        for i, nd in enumerate(self.nodes):
            owner[nd.sep] += 1
            if nd.is_leaf:
                owner[nd.verts] += 1
            for ch in nd.children:
                if not np.all(np.isin(self.nodes[ch].verts, nd.verts)):
                    problems.append(f"child {ch} not inside parent {i}")
            if len(nd.sep):
                sub = induced_subgraph(g, nd.verts)
                fresh = _sub_distances(sub, [nd.local(t) for t in nd.sep.tolist()])
                if not np.array_equal(np.isinf(fresh), np.isinf(nd.spt)) or not np.allclose(
                    fresh[np.isfinite(fresh)], nd.spt[np.isfinite(nd.spt)], rtol=1e-12, atol=0
                ):
                    problems.append(f"node {i}: stored distances differ from a fresh search")
        if np.any(owner != 1):
            problems.append("separators and leaves do not partition V")
        for i, nd in enumerate(self.nodes):
            for v in nd.verts.tolist():
                if i not in self._anc[int(self.home[v])]:
                    problems.append(f"home({v}) is not below node {i}")
                    break
        return problems

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        def enc(mat):
            return [[None if not math.isfinite(x) else x for x in row] for row in np.asarray(mat).tolist()]

        return {
            "version": FORMAT,
            "n": self.n,
            "n0": self.n0,
            "home": self.home.tolist(),
            "nodes": [
                {
                    "verts": nd.verts.tolist(),
                    "sep": nd.sep.tolist(),
                    "spt": enc(nd.spt),
                    "children": list(nd.children),
                    "leaf_table": None if nd.leaf_table is None else enc(nd.leaf_table),
                }
                for nd in self.nodes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SeparatorHierarchy":
        if data.get("version") != FORMAT:
            raise ValueError(f"expected version {FORMAT!r}, got {data.get('version')!r}")

        def dec(rows, width):
            arr = np.array([[np.inf if x is None else x for x in row] for row in rows], dtype=float)
            return arr.reshape(len(rows), width)

        nodes = []
        for raw in data["nodes"]:
            verts = np.asarray(raw["verts"], dtype=np.int64)
            table = None if raw["leaf_table"] is None else dec(raw["leaf_table"], len(verts))
            nodes.append(
                HierarchyNode(verts, np.asarray(raw["sep"], dtype=np.int64), dec(raw["spt"], len(verts)), list(raw["children"]), table)
            )
        for i, nd in enumerate(nodes):
            for ch in nd.children:
                nodes[ch].parent = i
        return cls(int(data["n"]), nodes, np.asarray(data["home"], dtype=np.int64), int(data["n0"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "SeparatorHierarchy":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_hierarchy(g: GeometricGraph, c: float | None = None, n0: int = DEFAULT_N0, beta: float = DEFAULT_BETA):
    return SeparatorHierarchy.build(g, c, n0, beta)
