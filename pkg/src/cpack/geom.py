"""Cubes on the canonical dyadic grid and compressed quadtrees over point sets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

# Grid resolution used for integer cell keys: a point's cell at level i is
# ``key >> (MAX_LEVEL - i)`` where ``key = floor(x * 2**MAX_LEVEL)``.
MAX_LEVEL = 60
PADDING = 1e-6


@dataclass(frozen=True)
class Cube:
    """Half-open canonical cube ``prod_k [cell_k, cell_k + 1) * 2**-level``."""

    level: int
    cell: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.cell)

    @property
    def side(self) -> float:
        return math.ldexp(1.0, -self.level)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.cell, dtype=float) * self.side

    @property
    def hi(self) -> np.ndarray:
        return (np.array(self.cell, dtype=float) + 1.0) * self.side

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.cell, dtype=float) + 0.5) * self.side

    @property
    def diam(self) -> float:
        return math.sqrt(self.dim) * self.side

    @property
    def radius(self) -> float:
        return self.diam / 2.0

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lo <= x) and np.all(x < self.hi))

    def expanded_bounds(self, factor: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
        """Closed bounds of the concentric cube with ``factor`` times the side."""
        half = 0.5 * factor * self.side
        c = self.center
        return c - half, c + half

    def ancestor(self, level: int) -> "Cube":
        if level > self.level:
            raise ValueError("ancestor level must not exceed cube level")
        shift = self.level - level
        return Cube(level, tuple(k >> shift for k in self.cell))


@dataclass(frozen=True)
class AffineTransform:
    """``normalized = (x - offset) * scale``."""

    scale: float
    offset: np.ndarray

    def apply(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.offset) * self.scale

    def invert(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) / self.scale + self.offset


def normalize_to_unit_cube(points, padding: float = PADDING) -> tuple[np.ndarray, AffineTransform]:
    """Uniformly scale and translate points into ``[0, 1)^d``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one point")
    if not np.all(np.isfinite(pts)):
        raise ValueError("coordinates must be finite")
    offset = pts.min(axis=0)
    spread = float((pts.max(axis=0) - offset).max())
    scale = 1.0 if spread == 0.0 else 1.0 / (spread * (1.0 + padding))
    tr = AffineTransform(scale, offset)
    out = tr.apply(pts)
    # guard against rounding onto the open face
    out = np.minimum(out, np.nextafter(1.0, 0.0))
    return out, tr


def point_keys(points: np.ndarray) -> list[tuple[int, ...]]:
    pts = np.asarray(points, dtype=float)
    if np.any(pts < 0.0) or np.any(pts >= 1.0):
        raise ValueError("points must lie in the unit cube [0, 1)^d")
    return [tuple(int(math.ldexp(float(x), MAX_LEVEL)) for x in row) for row in pts]


@dataclass
class QuadtreeNode:
    cube: Cube
    parent: int
    children: list[int] = field(default_factory=list)
    point_ids: list[int] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class CompressedQuadtree:
    points: np.ndarray
    nodes: list[QuadtreeNode]
    leaf_of: np.ndarray
    root: int = 0

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def leaves(self) -> list[int]:
        return [i for i, nd in enumerate(self.nodes) if nd.is_leaf]

    def levels(self) -> list[int]:
        return sorted({nd.cube.level for nd in self.nodes}, reverse=True)

    def postorder(self) -> list[int]:
        out: list[int] = []
        stack = [(self.root, False)]
        while stack:
            u, done = stack.pop()
            if done:
                out.append(u)
                continue
            stack.append((u, True))
            for ch in reversed(self.nodes[u].children):
                stack.append((ch, False))
        return out

    def subtree_points(self, u: int) -> list[int]:
        out: list[int] = []
        stack = [u]
        while stack:
            v = stack.pop()
            out.extend(self.nodes[v].point_ids)
            stack.extend(self.nodes[v].children)
        return sorted(out)

    def check_invariants(self) -> list[str]:
        """Structural violations (empty list when the tree is well formed)."""
        problems = []
        seen = np.zeros(len(self.points), dtype=int)
        for i, nd in enumerate(self.nodes):
            if nd.children and i != self.root and len(nd.children) < 2:
                problems.append(f"node {i} has a single child")
            if nd.children and nd.point_ids:
                problems.append(f"internal node {i} stores points")
            if not nd.children:
                locs = {tuple(self.points[p]) for p in nd.point_ids}
                if len(locs) != 1:
                    problems.append(f"leaf {i} holds {len(locs)} point locations")
            for p in nd.point_ids:
                seen[p] += 1
                if not nd.cube.contains(self.points[p]):
                    problems.append(f"point {p} outside its leaf cube")
            for ch in nd.children:
                cc = self.nodes[ch].cube
                if cc.level <= nd.cube.level or cc.ancestor(nd.cube.level) != nd.cube:
                    problems.append(f"child {ch} not strictly inside parent {i}")
        for p in np.flatnonzero(seen != 1):
            problems.append(f"point {p} lies in {seen[p]} leaves")
        return problems


def _shared_level(keys: list[tuple[int, ...]]) -> int:
    """Deepest level at which all keys fall into one cell."""
    d = len(keys[0])
    worst = 0
    for k in range(d):
        acc_or = 0
        acc_and = -1
        for key in keys:
            acc_or |= key[k]
            acc_and &= key[k]
        worst = max(worst, (acc_or ^ acc_and).bit_length())
    return MAX_LEVEL - worst


def build_compressed_quadtree(points) -> CompressedQuadtree:
    """Compressed quadtree; points with identical coordinates share one leaf."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    keys = point_keys(pts)
    d = pts.shape[1]
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, key in enumerate(keys):
        grp = groups.setdefault(key, [])
        if grp and not np.array_equal(pts[grp[0]], pts[i]):
            raise ValueError(f"points {grp[0]} and {i} are closer than the grid resolution 2**-{MAX_LEVEL}")
        grp.append(i)
    distinct = sorted(groups)

    nodes = [QuadtreeNode(Cube(0, (0,) * d), -1)]
    leaf_of = np.full(len(pts), -1, dtype=np.int64)

    def add(cube: Cube, parent: int) -> int:
        nodes.append(QuadtreeNode(cube, parent))
        nodes[parent].children.append(len(nodes) - 1)
        return len(nodes) - 1

    def make_leaf(u: int, key) -> None:
        nodes[u].point_ids = list(groups[key])
        for p in groups[key]:
            leaf_of[p] = u

    def split(u: int, members: list[tuple[int, ...]]) -> None:
        level = nodes[u].cube.level + 1
        shift = MAX_LEVEL - level
        buckets: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
        for key in members:
            buckets.setdefault(tuple(k >> shift for k in key), []).append(key)
        for cell in sorted(buckets):
            sub = buckets[cell]
            if len(sub) == 1:
                make_leaf(add(Cube(level, cell), u), sub[0])
                continue
            j = _shared_level(sub)
            v = add(Cube(j, tuple(k >> (MAX_LEVEL - j) for k in sub[0])), u)
            split(v, sub)

    if len(distinct) == 1:
        make_leaf(0, distinct[0])
    else:
        j = _shared_level(distinct)
        if j > 0:
            v = add(Cube(j, tuple(k >> (MAX_LEVEL - j) for k in distinct[0])), 0)
            split(v, distinct)
        else:
            split(0, distinct)
    return CompressedQuadtree(pts, nodes, leaf_of)


def canonical_neighbors(s: Cube) -> list[Cube]:
    """Same-level grid cells adjacent to ``s`` (offsets in {-1, 0, 1}^d), clipped to the unit cube."""
    limit = 1 << s.level
    out = []
    for off in itertools.product((-1, 0, 1), repeat=s.dim):
        if not any(off):
            continue
        cell = tuple(c + o for c, o in zip(s.cell, off))
        if all(0 <= c < limit for c in cell):
            out.append(Cube(s.level, cell))
    return out


def canonical_cube_of_edge(e_length: float) -> int:
    """Largest level i with 2**-i >= e_length / 2 (never below 0)."""
    if not e_length > 0:
        raise ValueError("edge length must be positive")
    i = max(0, math.floor(math.log2(2.0 / e_length)))
    # correct floating error around exact powers of two
    while i > 0 and math.ldexp(1.0, -i) < e_length / 2.0:
        i -= 1
    while math.ldexp(1.0, -(i + 1)) >= e_length / 2.0:
        i += 1
    return i
