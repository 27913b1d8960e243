"""Balanced vertex separators: k-enclosing ball, ring, unit-capacity max-flow."""
from __future__ import annotations

import itertools
import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import GeometricGraph

DEFAULT_BETA = 0.25


def doubling_lambda(d: int) -> int:
    return 7 if d == 2 else 2 ** math.ceil(1.6 * d)


def guaranteed_beta(d: int) -> float:
    return 1.0 / (2.0 * doubling_lambda(d) ** 3)


def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def k_enclosing_ball(points, k: int) -> tuple[int, float]:
    """(center id, radius) of a ball around an input point holding >= k points.

    The radius is the smallest k-th nearest-neighbour distance (a point counts
    as its own first neighbour), which is within a factor 2 of the optimum.
    Ties go to the smallest id.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    kth = np.sort(_pairwise(pts), axis=1)[:, k - 1]
    center = int(np.argmin(kth))
    return center, float(kth[center])


@dataclass
class RingSeparator:
    center: int
    radius: float
    inner: np.ndarray
    outer: np.ndarray
    middle: np.ndarray
    beta: float


def ring_separator(g: GeometricGraph, beta: float = DEFAULT_BETA, max_retries: int = 64) -> RingSeparator:
    """Ring b(p, r) inside b(p, 2r) with >= ceil(beta n) points inside and <= n/2 within 2r.

    If the outer bound fails, beta is halved until it holds; the value that
    worked is reported in ``beta``.
    """
    n = g.n
    if not 0 < beta <= 0.5:
        raise ValueError("beta must be in (0, 1/2]")
    if n < 2:
        raise ValueError("need at least two vertices")
    dist = _pairwise(g.coords)
    ordered = np.sort(dist, axis=1)
    for _ in range(max_retries):
        k = math.ceil(beta * n)
        if k < 1:
            break
        kth = ordered[:, k - 1]
        p = int(np.argmin(kth))
        r = float(kth[p])
        row = dist[p]
        if np.count_nonzero(row <= 2.0 * r) <= n / 2:
            inner = np.flatnonzero(row <= r)
            outer = np.flatnonzero(row > 2.0 * r)
            middle = np.flatnonzero((row > r) & (row <= 2.0 * r))
            return RingSeparator(p, r, inner, outer, middle, beta)
        if k == 1:
            break
        beta /= 2.0
    raise RuntimeError("no ring satisfies the outer bound (coincident points?)")


@dataclass
class SeparatorResult:
    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    cut_edges: list[tuple[int, int]]
    flow: int
    beta_achieved: float
    ring: RingSeparator | None = None


def _flow_network(g: GeometricGraph, ring: RingSeparator):
    n, m = g.n, g.m
    src, snk = n, n + 1
    inf = n * m + 1
    tails, heads, caps = [], [], []

    def arc_pair(u, v, cu, cv):
        tails.extend((u, v))
        heads.extend((v, u))
        caps.extend((cu, cv))

    for u, v in g.edges.tolist():
        arc_pair(u, v, 1, 1)
    for v in ring.inner.tolist():
        arc_pair(src, v, inf, 0)
    for v in ring.outer.tolist():
        arc_pair(v, snk, inf, 0)
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    order = np.argsort(tails, kind="stable")
    start = np.searchsorted(tails[order], np.arange(n + 3))
    return tails, heads, np.asarray(caps, dtype=np.int64), start, order, src, snk


def min_cut_separator(g: GeometricGraph, ring: RingSeparator, c: float | None = None) -> SeparatorResult:
    """Unit-capacity max-flow from the inner ball to the outside of the outer ball."""
    if len(ring.inner) == 0 or len(ring.outer) == 0:
        raise ValueError("ring needs non-empty inner and outer sets")
    tails, heads, caps, start, order, src, snk = _flow_network(g, ring)
    flow, residual = _kernels.edmonds_karp(heads, caps, start, order, src, snk)
    # source side = reachable in the residual network
    seen = np.zeros(g.n + 2, dtype=bool)
    seen[src] = True
    dq = deque([src])
    while dq:
        u = dq.popleft()
        for idx in range(start[u], start[u + 1]):
            e = order[idx]
            v = heads[e]
            if residual[e] > 0 and not seen[v]:
                seen[v] = True
                dq.append(v)
    side = seen[: g.n]
    cut = [(u, v) if side[u] else (v, u) for u, v in g.edges.tolist() if side[u] != side[v]]
    C = np.unique(np.asarray([v for _, v in cut], dtype=np.int64))
    in_c = np.zeros(g.n, dtype=bool)
    in_c[C] = True
    A = np.flatnonzero(side & ~in_c)
    B = np.flatnonzero(~side & ~in_c)
    if c is not None and flow > 2 * c:
        warnings.warn(f"flow {flow} exceeds 2c = {2 * c:g}; c is probably underestimated", stacklevel=2)
    return SeparatorResult(C, A, B, sorted(cut), int(flow), ring.beta, ring)


def build_separator(g: GeometricGraph, c: float | None = None, beta: float = DEFAULT_BETA) -> SeparatorResult:
    return min_cut_separator(g, ring_separator(g, beta), c)


def verify_separator(g: GeometricGraph, res: SeparatorResult) -> list[str]:
    problems = []
    n = g.n
    label = np.full(n, -1, dtype=np.int64)
    for tag, part in enumerate((res.A, res.B, res.C)):
        if np.any(label[part] >= 0):
            problems.append("A, B, C overlap")
        label[part] = tag
    if np.any(label < 0):
        problems.append("A, B, C do not cover V")
    for u, v in g.edges.tolist():
        if {label[u], label[v]} == {0, 1}:
            problems.append(f"edge ({u},{v}) joins A and B")
    bound = res.beta_achieved * n - len(res.C)
    if min(len(res.A), len(res.B)) < bound:
        problems.append(f"unbalanced: min(|A|,|B|) = {min(len(res.A), len(res.B))} < {bound:g}")
    return problems


def brute_min_cut(g: GeometricGraph, ring: RingSeparator, max_middle: int = 20) -> int:
    """Minimum number of edges separating inner from outer, by enumerating middle subsets."""
    mid = ring.middle.tolist()
    if len(mid) > max_middle:
        raise ValueError("too many middle vertices for exhaustive enumeration")
    base = np.zeros(g.n, dtype=bool)
    base[ring.inner] = True
    u, v = g.edges[:, 0], g.edges[:, 1]
    best = g.m
    for r in range(len(mid) + 1):
        for extra in itertools.combinations(mid, r):
            s = base.copy()
            s[list(extra)] = True
            best = min(best, int(np.count_nonzero(s[u] != s[v])))
    return best
