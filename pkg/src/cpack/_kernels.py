"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``CPACK_DISABLE_NUMBA=1`` before import to force the numpy/Python
implementations (also used automatically when numba is not importable).
Both paths are kept importable under explicit names (``*_numpy`` and
``*_numba``) so tests and the benchmark can compare them directly.
"""
from __future__ import annotations

import os
from collections import deque

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("CPACK_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# segment / axis-aligned box clipping (Liang-Barsky)


def clip_box_numpy(p: np.ndarray, q: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Length of each segment p[i]q[i] inside the closed box [lo, hi]."""
    p = np.atleast_2d(p)
    q = np.atleast_2d(q)
    dvec = q - p
    tmin = np.zeros(len(p))
    tmax = np.ones(len(p))
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(p.shape[1]):
            dk = dvec[:, k]
            flat = dk == 0.0
            t1 = (lo[k] - p[:, k]) / dk
            t2 = (hi[k] - p[:, k]) / dk
            ta = np.where(flat, -np.inf, np.minimum(t1, t2))
            tb = np.where(flat, np.inf, np.maximum(t1, t2))
            outside = flat & ((p[:, k] < lo[k]) | (p[:, k] > hi[k]))
            tmin = np.maximum(tmin, ta)
            tmax = np.where(outside, -1.0, np.minimum(tmax, tb))
    seg = np.sqrt((dvec * dvec).sum(axis=1))
    return np.maximum(tmax - tmin, 0.0) * seg


def _clip_box_loop(p, q, lo, hi):
    m, d = p.shape
    out = np.zeros(m)
    for i in range(m):
        tmin = 0.0
        tmax = 1.0
        seg2 = 0.0
        for k in range(d):
            dk = q[i, k] - p[i, k]
            seg2 += dk * dk
            if dk == 0.0:
                if p[i, k] < lo[k] or p[i, k] > hi[k]:
                    tmax = -1.0
            else:
                t1 = (lo[k] - p[i, k]) / dk
                t2 = (hi[k] - p[i, k]) / dk
                if t1 > t2:
                    t1, t2 = t2, t1
                if t1 > tmin:
                    tmin = t1
                if t2 < tmax:
                    tmax = t2
        if tmax > tmin:
            out[i] = (tmax - tmin) * np.sqrt(seg2)
    return out


# ---------------------------------------------------------------------------
# total segment length inside balls of many radii around one centre


def ball_lengths_numpy(p: np.ndarray, q: np.ndarray, center: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """For every radius r, total length of all segments inside the closed ball b(center, r)."""
    dvec = q - p
    a = (dvec * dvec).sum(axis=1)
    w = p - center
    b = (dvec * w).sum(axis=1)
    cw = (w * w).sum(axis=1)
    out = np.empty(len(radii))
    # chunk over radii to bound memory at (chunk x m)
    chunk = max(1, 2_000_000 // max(1, len(p)))
    for s in range(0, len(radii), chunk):
        r = radii[s : s + chunk, None]
        disc = b * b - a * (cw - r * r)
        root = np.sqrt(np.maximum(disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.clip((-b - root) / a, 0.0, 1.0)
            t2 = np.clip((-b + root) / a, 0.0, 1.0)
        lens = np.where(disc > 0.0, (t2 - t1) * np.sqrt(a), 0.0)
        out[s : s + chunk] = lens.sum(axis=1)
    return out


def _ball_lengths_loop(p, q, center, radii):
    m, d = p.shape
    nr = radii.shape[0]
    a = np.empty(m)
    b = np.empty(m)
    cw = np.empty(m)
    for i in range(m):
        aa = 0.0
        bb = 0.0
        cc = 0.0
        for k in range(d):
            dk = q[i, k] - p[i, k]
            wk = p[i, k] - center[k]
            aa += dk * dk
            bb += dk * wk
            cc += wk * wk
        a[i] = aa
        b[i] = bb
        cw[i] = cc
    out = np.zeros(nr)
    for j in range(nr):
        r2 = radii[j] * radii[j]
        total = 0.0
        for i in range(m):
            disc = b[i] * b[i] - a[i] * (cw[i] - r2)
            if disc <= 0.0:
                continue
            root = np.sqrt(disc)
            t1 = (-b[i] - root) / a[i]
            t2 = (-b[i] + root) / a[i]
            if t1 < 0.0:
                t1 = 0.0
            if t2 > 1.0:
                t2 = 1.0
            if t2 > t1:
                total += (t2 - t1) * np.sqrt(a[i])
        out[j] = total
    return out


# ---------------------------------------------------------------------------
# Floyd-Warshall


def floyd_warshall_numpy(w: np.ndarray) -> np.ndarray:
    dist = np.array(w, dtype=float, copy=True)
    for k in range(dist.shape[0]):
        np.minimum(dist, dist[:, k, None] + dist[None, k, :], out=dist)
    return dist


def _floyd_warshall_loop(w):
    n = w.shape[0]
    dist = w.copy()
    for k in range(n):
        for i in range(n):
            dik = dist[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                alt = dik + dist[k, j]
                if alt < dist[i, j]:
                    dist[i, j] = alt
    return dist


# ---------------------------------------------------------------------------
# greedy colouring in index order


def greedy_color_numpy(adj: np.ndarray) -> np.ndarray:
    """Colour vertex i with the smallest colour unused by its neighbours j < i."""
    k = adj.shape[0]
    colors = np.full(k, -1, dtype=np.int64)
    for i in range(k):
        used = colors[:i][adj[i, :i]]
        if used.size == 0:
            colors[i] = 0
            continue
        mark = np.zeros(used.max() + 2, dtype=bool)
        mark[used] = True
        colors[i] = int(np.argmin(mark))
    return colors


def _greedy_color_loop(adj):
    k = adj.shape[0]
    colors = np.full(k, -1, dtype=np.int64)
    mark = np.zeros(k + 1, dtype=np.int64)
    for i in range(k):
        stamp = i + 1
        for j in range(i):
            if adj[i, j]:
                mark[colors[j]] = stamp
        c = 0
        while mark[c] == stamp:
            c += 1
        colors[i] = c
    return colors


# ---------------------------------------------------------------------------
# Edmonds-Karp over a paired-arc residual network
#
# Arcs are stored so that arc ``e ^ 1`` is the reverse of arc ``e``.
# ``start``/``order`` is a CSR index of outgoing arcs per node.


def edmonds_karp_python(head, cap, start, order, source, sink):
    cap = cap.copy()
    n = len(start) - 1
    flow = 0
    while True:
        via = np.full(n, -1, dtype=np.int64)
        seen = np.zeros(n, dtype=bool)
        seen[source] = True
        dq = deque([source])
        while dq and not seen[sink]:
            u = dq.popleft()
            for idx in range(start[u], start[u + 1]):
                e = order[idx]
                v = head[e]
                if cap[e] > 0 and not seen[v]:
                    seen[v] = True
                    via[v] = e
                    dq.append(v)
        if not seen[sink]:
            break
        bottleneck = np.iinfo(np.int64).max
        v = sink
        while v != source:
            e = via[v]
            bottleneck = min(bottleneck, cap[e])
            v = head[e ^ 1]
        v = sink
        while v != source:
            e = via[v]
            cap[e] -= bottleneck
            cap[e ^ 1] += bottleneck
            v = head[e ^ 1]
        flow += bottleneck
    return flow, cap


def _edmonds_karp_loop(head, cap, start, order, source, sink):
    cap = cap.copy()
    n = start.shape[0] - 1
    flow = 0
    via = np.empty(n, dtype=np.int64)
    seen = np.empty(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    while True:
        via[:] = -1
        seen[:] = False
        seen[source] = True
        qh = 0
        qt = 0
        queue[qt] = source
        qt += 1
        while qh < qt and not seen[sink]:
            u = queue[qh]
            qh += 1
            for idx in range(start[u], start[u + 1]):
                e = order[idx]
                v = head[e]
                if cap[e] > 0 and not seen[v]:
                    seen[v] = True
                    via[v] = e
                    queue[qt] = v
                    qt += 1
        if not seen[sink]:
            break
        bottleneck = np.iinfo(np.int64).max
        v = sink
        while v != source:
            e = via[v]
            if cap[e] < bottleneck:
                bottleneck = cap[e]
            v = head[e ^ 1]
        v = sink
        while v != source:
            e = via[v]
            cap[e] -= bottleneck
            cap[e ^ 1] += bottleneck
            v = head[e ^ 1]
        flow += bottleneck
    return flow, cap


if HAS_NUMBA:
    clip_box_numba = numba.njit(cache=True)(_clip_box_loop)
    ball_lengths_numba = numba.njit(cache=True)(_ball_lengths_loop)
    floyd_warshall_numba = numba.njit(cache=True)(_floyd_warshall_loop)
    greedy_color_numba = numba.njit(cache=True)(_greedy_color_loop)
    edmonds_karp_numba = numba.njit(cache=True)(_edmonds_karp_loop)
else:  # pragma: no cover
    clip_box_numba = ball_lengths_numba = floyd_warshall_numba = None
    greedy_color_numba = edmonds_karp_numba = None


def clip_box(p, q, lo, hi):
    p = np.ascontiguousarray(np.atleast_2d(p), dtype=float)
    q = np.ascontiguousarray(np.atleast_2d(q), dtype=float)
    lo = np.ascontiguousarray(lo, dtype=float)
    hi = np.ascontiguousarray(hi, dtype=float)
    if USE_NUMBA:
        return clip_box_numba(p, q, lo, hi)
    return clip_box_numpy(p, q, lo, hi)


def ball_lengths(p, q, center, radii):
    p = np.ascontiguousarray(p, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    center = np.ascontiguousarray(center, dtype=float)
    radii = np.ascontiguousarray(radii, dtype=float)
    if len(p) == 0:
        return np.zeros(len(radii))
    if USE_NUMBA:
        return ball_lengths_numba(p, q, center, radii)
    return ball_lengths_numpy(p, q, center, radii)


def floyd_warshall(w):
    w = np.ascontiguousarray(w, dtype=float)
    if USE_NUMBA:
        return floyd_warshall_numba(w)
    return floyd_warshall_numpy(w)


def greedy_color(adj):
    adj = np.ascontiguousarray(adj, dtype=np.bool_)
    if USE_NUMBA:
        return greedy_color_numba(adj)
    return greedy_color_numpy(adj)


def edmonds_karp(head, cap, start, order, source, sink):
    """Return (max-flow value, residual capacities)."""
    args = (
        np.ascontiguousarray(head, dtype=np.int64),
        np.ascontiguousarray(cap, dtype=np.int64),
        np.ascontiguousarray(start, dtype=np.int64),
        np.ascontiguousarray(order, dtype=np.int64),
        int(source),
        int(sink),
    )
    if USE_NUMBA:
        flow, res = edmonds_karp_numba(*args)
        return int(flow), res
    return edmonds_karp_python(*args)
