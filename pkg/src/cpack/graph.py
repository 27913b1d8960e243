"""Geometric graphs, shortest-path oracles, packedness estimation and test families."""
from __future__ import annotations

import heapq
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .geom import AffineTransform, normalize_to_unit_cube

MAX_ALL_PAIRS_N = 2000
# sample budget used wherever a packedness estimate is compared against a declared c
CHECK_BUDGET = 20_000


class GraphFormatError(ValueError):
    """Malformed graph file; ``line`` is the 1-based offending line (0 if global)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def exhaustive_guard(default: int) -> int:
    """Size guard for exhaustive checks, overridable with CPACK_MAX_EXHAUSTIVE_N."""
    raw = os.environ.get("CPACK_MAX_EXHAUSTIVE_N")
    return int(raw) if raw else default


@dataclass
class GeometricGraph:
    """Undirected graph on points in R^d whose edge lengths are Euclidean.

    Build instances with :meth:`from_edges`, which validates the edge list and
    recomputes every length from the coordinates.
    """

    coords: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, coords, edges, lengths=None) -> "GeometricGraph":
        pts = np.atleast_2d(np.asarray(coords, dtype=float))
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("need at least one vertex in d >= 1 dimensions")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        n = len(pts)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        canon = np.sort(e, axis=1)
        if len(np.unique(canon, axis=0)) != len(canon):
            raise ValueError("duplicate edge")
        lens = np.linalg.norm(pts[e[:, 0]] - pts[e[:, 1]], axis=1) if len(e) else np.zeros(0)
        if np.any(lens == 0.0):
            raise ValueError("zero-length edge (coincident endpoints)")
        if lengths is not None:
            given = np.asarray(lengths, dtype=float)
            if given.shape != lens.shape or not np.allclose(given, lens, rtol=1e-9, atol=0.0):
                raise ValueError("supplied lengths disagree with Euclidean edge lengths")
        return cls(pts, e, lens)

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @cached_property
    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for (u, v), w in zip(self.edges.tolist(), self.lengths.tolist()):
            adj[u].append((v, w))
            adj[v].append((u, w))
        return adj

    def total_length(self) -> float:
        return float(self.lengths.sum())

    def components(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Component label per vertex (-1 for vertices outside ``mask``)."""
        return component_labels(self.n, self.edges, mask)

    def is_connected(self) -> bool:
        return self.n <= 1 or int(self.components().max()) == 0

    def normalized(self) -> tuple["GeometricGraph", AffineTransform]:
        pts, tr = normalize_to_unit_cube(self.coords)
        return GeometricGraph(pts, self.edges.copy(), self.lengths * tr.scale), tr

    def has_duplicate_points(self) -> bool:
        return len(np.unique(self.coords, axis=0)) != self.n


def component_labels(n: int, edges: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    if mask is None:
        mask = np.ones(n, dtype=bool)
    idx = np.flatnonzero(mask)
    labels = np.full(n, -1, dtype=np.int64)
    if len(idx) == 0:
        return labels
    local = np.full(n, -1, dtype=np.int64)
    local[idx] = np.arange(len(idx))
    keep = mask[edges[:, 0]] & mask[edges[:, 1]] if len(edges) else np.zeros(0, dtype=bool)
    e = local[edges[keep]] if len(edges) else np.zeros((0, 2), dtype=np.int64)
    k = len(idx)
    mat = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(k, k))
    _, lab = connected_components(mat, directed=False)
    # relabel in order of first appearance so labels are deterministic
    _, first = np.unique(lab, return_index=True)
    order = np.argsort(np.argsort(first))
    labels[idx] = order[lab]
    return labels


# ---------------------------------------------------------------------------
# shortest paths


def dijkstra(g: GeometricGraph, source: int, allowed: np.ndarray | None = None):
    """Distances and predecessors from ``source``; unreachable vertices get inf / -1.

    ``allowed`` restricts the search to an induced subgraph.
    """
    n = g.n
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    if allowed is not None and not allowed[source]:
        raise ValueError("source outside the allowed vertex set")
    dist[source] = 0.0
    heap = [(0.0, source)]
    adj = g.adjacency
    done = np.zeros(n, dtype=bool)
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            if allowed is not None and not allowed[v]:
                continue
            alt = du + w
            if alt < dist[v]:
                dist[v] = alt
                pred[v] = u
                heapq.heappush(heap, (alt, v))
    return dist, pred


def all_pairs(g: GeometricGraph, max_n: int = MAX_ALL_PAIRS_N) -> np.ndarray:
    """Distance matrix by repeated Dijkstra."""
    if g.n > max_n:
        raise ValueError(f"all_pairs refused: n={g.n} exceeds guard {max_n}")
    return np.vstack([dijkstra(g, s)[0] for s in range(g.n)])


def weight_matrix(g: GeometricGraph) -> np.ndarray:
    w = np.full((g.n, g.n), np.inf)
    np.fill_diagonal(w, 0.0)
    if g.m:
        w[g.edges[:, 0], g.edges[:, 1]] = g.lengths
        w[g.edges[:, 1], g.edges[:, 0]] = g.lengths
    return w


def floyd_warshall(g: GeometricGraph, max_n: int = MAX_ALL_PAIRS_N) -> np.ndarray:
    """Independent all-pairs oracle (no priority queue involved)."""
    if g.n > max_n:
        raise ValueError(f"floyd_warshall refused: n={g.n} exceeds guard {max_n}")
    return _kernels.floyd_warshall(weight_matrix(g))


# ---------------------------------------------------------------------------
# packedness


def estimate_packedness(g: GeometricGraph, sample_budget: int = 200_000) -> float:
    """Certified lower bound on the packedness constant.

    Each sampled ball b(x, r) contributes (clipped edge length inside)/r, which
    cannot exceed the true constant. Centres are vertices and edge midpoints;
    radii are distances from the centre to the vertices, half edge lengths and
    pairwise vertex distances, capped at the point-set spread. When the
    candidate count exceeds ``sample_budget`` the radii of each centre are
    thinned evenly over their sorted order.
    """
    if sample_budget < 1:
        raise ValueError("sample_budget must be >= 1")
    if g.m == 0:
        return 0.0
    p = g.coords[g.edges[:, 0]]
    q = g.coords[g.edges[:, 1]]
    centers = np.vstack([g.coords, 0.5 * (p + q)])
    diff = g.coords[:, None, :] - g.coords[None, :, :]
    pair = np.sqrt((diff * diff).sum(axis=2))
    spread = float(pair.max()) if g.n > 1 else float(g.lengths.max())
    spread = max(spread, float(g.lengths.max()))
    shared = np.unique(np.concatenate([0.5 * g.lengths, pair[np.triu_indices(g.n, 1)]]))
    per_center = max(1, sample_budget // len(centers))
    best = 0.0
    for x in centers:
        own = np.linalg.norm(g.coords - x, axis=1)
        radii = np.unique(np.concatenate([own, shared]))
        radii = radii[(radii > 0.0) & (radii <= spread)]
        if len(radii) > per_center:
            pick = np.unique(np.linspace(0, len(radii) - 1, per_center).round().astype(int))
            radii = radii[pick]
        if len(radii) == 0:
            continue
        lens = _kernels.ball_lengths(p, q, x, radii)
        best = max(best, float((lens / radii).max()))
    return best


# ---------------------------------------------------------------------------
# families


FAMILIES = ("path", "grid", "star", "spiral")


def generate_family(kind: str, n: int, seed: int = 0) -> tuple[GeometricGraph, float]:
    """Deterministic test graph and an upper bound on its packedness.

    ``path``: n collinear unit-spaced vertices (c = 2).
    ``grid``: k x k unit grid with k = isqrt(n) (c <= 4k; a stress case).
    ``star``: a centre plus n unit rays at equal angles, rotated by the seed (c = n).
    ``spiral``: n vertices at unit steps along an Archimedean spiral with unit
    arm spacing; the bound returned is the estimator value.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    if kind == "path":
        coords = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
        edges = [(i, i + 1) for i in range(n - 1)]
        return GeometricGraph.from_edges(coords, edges), 2.0
    if kind == "grid":
        k = math.isqrt(n)
        if k < 2:
            raise ValueError("grid needs n >= 4")
        xs, ys = np.meshgrid(np.arange(k, dtype=float), np.arange(k, dtype=float), indexing="ij")
        coords = np.column_stack([xs.ravel(), ys.ravel()])
        edges = []
        for i in range(k):
            for j in range(k):
                v = i * k + j
                if i + 1 < k:
                    edges.append((v, v + k))
                if j + 1 < k:
                    edges.append((v, v + 1))
        return GeometricGraph.from_edges(coords, edges), 4.0 * k
    if kind == "star":
        phase = rng.uniform(0.0, 2.0 * math.pi)
        ang = phase + 2.0 * math.pi * np.arange(n) / n
        coords = np.vstack([[0.0, 0.0], np.column_stack([np.cos(ang), np.sin(ang)])])
        edges = [(0, i + 1) for i in range(n)]
        return GeometricGraph.from_edges(coords, edges), float(n)
    if kind == "spiral":
        b = 1.0 / (2.0 * math.pi)
        theta = 2.0 * math.pi * 1.5 + rng.uniform(0.0, 2.0 * math.pi)
        pts = [(b * theta * math.cos(theta), b * theta * math.sin(theta))]
        while len(pts) < n:
            # advance so the chord to the previous vertex is (close to) one
            theta += 1.0 / (b * math.hypot(theta, 1.0))
            pts.append((b * theta * math.cos(theta), b * theta * math.sin(theta)))
        coords = np.array(pts)
        g = GeometricGraph.from_edges(coords, [(i, i + 1) for i in range(n - 1)])
        return g, estimate_packedness(g, sample_budget=CHECK_BUDGET)
    raise ValueError(f"unknown family {kind!r}; expected one of {FAMILIES}")


# ---------------------------------------------------------------------------
# text format


def parse_graph(text: str) -> GeometricGraph:
    """Parse the line-oriented ``d/v/e`` graph format."""
    header = None
    verts: dict[int, list[float]] = {}
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if header is None:
                if len(tok) != 6 or tok[0] != "d" or tok[2] != "n" or tok[4] != "m":
                    raise GraphFormatError("expected header 'd <dim> n <count> m <count>'", lineno)
                header = (int(tok[1]), int(tok[3]), int(tok[5]))
                if header[0] < 1 or header[1] < 1 or header[2] < 0:
                    raise GraphFormatError("header counts out of range", lineno)
            elif tok[0] == "v":
                d = header[0]
                if len(tok) != 2 + d:
                    raise GraphFormatError(f"vertex line needs id and {d} coordinates", lineno)
                vid = int(tok[1])
                if vid in verts:
                    raise GraphFormatError(f"vertex {vid} defined twice", lineno)
                if edges:
                    raise GraphFormatError("vertex line after edge lines", lineno)
                verts[vid] = [float(x) for x in tok[2:]]
                if not all(math.isfinite(x) for x in verts[vid]):
                    raise GraphFormatError("non-finite coordinate", lineno)
            elif tok[0] == "e":
                if len(tok) != 3:
                    raise GraphFormatError("edge line needs two vertex ids", lineno)
                u, v = int(tok[1]), int(tok[2])
                if u not in verts or v not in verts:
                    raise GraphFormatError(f"edge ({u}, {v}) references an undefined vertex", lineno)
                if u == v:
                    raise GraphFormatError("self-loop", lineno)
                edges.append((u, v))
            else:
                raise GraphFormatError(f"unknown record type {tok[0]!r}", lineno)
        except GraphFormatError:
            raise
        except ValueError as exc:
            raise GraphFormatError(str(exc), lineno) from None
    if header is None:
        raise GraphFormatError("missing header")
    d, n, m = header
    if sorted(verts) != list(range(n)):
        raise GraphFormatError(f"expected vertex ids 0..{n - 1}, got {len(verts)} vertices")
    if len(edges) != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(edges)}")
    try:
        return GeometricGraph.from_edges([verts[i] for i in range(n)], edges)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def format_graph(g: GeometricGraph) -> str:
    lines = [f"d {g.dim} n {g.n} m {g.m}"]
    for i, row in enumerate(g.coords.tolist()):
        lines.append("v " + str(i) + " " + " ".join(repr(x) for x in row))
    for u, v in g.edges.tolist():
        lines.append(f"e {u} {v}")
    return "\n".join(lines) + "\n"


def read_graph(path) -> GeometricGraph:
    return parse_graph(Path(path).read_text())


def write_graph(g: GeometricGraph, path) -> None:
    Path(path).write_text(format_graph(g))


def induced_subgraph(g: GeometricGraph, verts) -> GeometricGraph:
    """Subgraph on ``verts`` (sorted); local vertex i is ``verts[i]``."""
    verts = np.asarray(verts, dtype=np.int64)
    local = np.full(g.n, -1, dtype=np.int64)
    local[verts] = np.arange(len(verts))
    if g.m:
        keep = (local[g.edges[:, 0]] >= 0) & (local[g.edges[:, 1]] >= 0)
        edges = local[g.edges[keep]]
        lengths = g.lengths[keep]
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
        lengths = np.zeros(0)
    return GeometricGraph(g.coords[verts], edges, lengths)
