"""Lowest common ancestor via Euler tour and a sparse table over depths."""
from __future__ import annotations

import numpy as np


class EulerLCA:
    """Static LCA index for a rooted tree given by a ``children`` adjacency list."""

    def __init__(self, children: list[list[int]], root: int = 0):
        n = len(children)
        self.depth = np.zeros(n, dtype=np.int64)
        self.parent = np.full(n, -1, dtype=np.int64)
        euler: list[int] = []
        first = np.full(n, -1, dtype=np.int64)
        stack = [(root, 0)]
        while stack:
            u, i = stack.pop()
            if i == 0:
                first[u] = len(euler)
            euler.append(u)
            if i < len(children[u]):
                stack.append((u, i + 1))
                v = children[u][i]
                self.parent[v] = u
                self.depth[v] = self.depth[u] + 1
                stack.append((v, 0))
        if np.any(first < 0):
            raise ValueError("tree is not connected from the root")
        self.first = first
        self.euler = np.asarray(euler, dtype=np.int64)
        # sparse table of positions in the Euler tour with minimum depth
        m = len(self.euler)
        depths = self.depth[self.euler]
        table = [np.arange(m, dtype=np.int64)]
        j = 1
        while (1 << j) <= m:
            prev = table[-1]
            half = 1 << (j - 1)
            a = prev[: m - (1 << j) + 1]
            b = prev[half : half + len(a)]
            table.append(np.where(depths[a] <= depths[b], a, b))
            j += 1
        self._table = table
        self._depths = depths

    def query(self, u: int, v: int) -> int:
        i, j = int(self.first[u]), int(self.first[v])
        if i > j:
            i, j = j, i
        k = (j - i + 1).bit_length() - 1
        a = self._table[k][i]
        b = self._table[k][j - (1 << k) + 1]
        return int(self.euler[a] if self._depths[a] <= self._depths[b] else self.euler[b])

    def query_many(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        i = self.first[us]
        j = self.first[vs]
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        span = hi - lo + 1
        k = np.floor(np.log2(span)).astype(np.int64)
        # guard against log2 rounding at exact powers of two
        k = np.where((1 << (k + 1)) <= span, k + 1, k)
        k = np.where((1 << k) > span, k - 1, k)
        out = np.empty(len(lo), dtype=np.int64)
        for kk in np.unique(k):
            sel = k == kk
            a = self._table[kk][lo[sel]]
            b = self._table[kk][hi[sel] - (1 << kk) + 1]
            out[sel] = np.where(self._depths[a] <= self._depths[b], self.euler[a], self.euler[b])
        return out

    def ancestors(self, u: int) -> list[int]:
        """``u`` and its ancestors, ordered from ``u`` up to the root."""
        out = [u]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out
