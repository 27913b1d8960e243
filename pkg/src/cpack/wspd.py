"""Well-separated pair decomposition extracted from a c-connected tree."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cct import CCTree

FLAVORS = ("euclidean", "graph")


@dataclass(frozen=True)
class WspdPair:
    a: int
    b: int
    dub_a: float
    dub_b: float
    dist: float

    def separated(self, sigma: float) -> bool:
        return is_separated(self.dub_a, self.dub_b, self.dist, sigma)


@dataclass
class Wspd:
    sigma: float
    flavor: str
    tree: CCTree
    pairs: list[WspdPair] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def dump_lines(self) -> list[str]:
        nodes = self.tree.nodes
        return [
            f"P {nodes[p.a].rep} {nodes[p.b].rep} {p.dub_a!r} {p.dub_b!r} {p.dist!r}" for p in self.pairs
        ]


def is_separated(dub_a: float, dub_b: float, dist: float, sigma: float) -> bool:
    return max(dub_a, dub_b) * sigma <= dist - dub_a - dub_b


def euclidean_dist_fn(coords: np.ndarray) -> Callable[[int, int], float]:
    def dist(u: int, v: int) -> float:
        return float(np.linalg.norm(coords[u] - coords[v]))

    return dist


def matrix_dist_fn(dist: np.ndarray) -> Callable[[int, int], float]:
    return lambda u, v: float(dist[u, v])


def build_wspd(
    t: CCTree,
    sigma: float,
    flavor: str = "graph",
    dist_fn: Callable[[int, int], float] | None = None,
    coords: np.ndarray | None = None,
) -> Wspd:
    """Split-tree style extraction.

    ``dist_fn(u, v)`` gives the distance between representatives. For the
    euclidean flavor it defaults to Euclidean distance over ``coords``; for the
    graph flavor it must be supplied (an exact oracle or a distance matrix).
    """
    if not sigma > 1:
        raise ValueError("sigma must be > 1")
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    if dist_fn is None:
        if flavor == "graph" or coords is None:
            raise ValueError("dist_fn is required (or coords for the euclidean flavor)")
        dist_fn = euclidean_dist_fn(np.asarray(coords, dtype=float))
    nodes = t.nodes
    out = Wspd(float(sigma), flavor, t)

    def split_key(u: int):
        nd = nodes[u]
        return (nd.dub, nd.cube.side, -nd.rep)

    # stack items: ("self", u) or ("pair", u, v)
    stack: list[tuple] = [("self", t.root)]
    while stack:
        item = stack.pop()
        if item[0] == "self":
            ch = nodes[item[1]].children
            for i in range(len(ch) - 1, -1, -1):
                for j in range(len(ch) - 1, i, -1):
                    stack.append(("pair", ch[i], ch[j]))
                stack.append(("self", ch[i]))
            continue
        _, u, v = item
        nu, nv = nodes[u], nodes[v]
        d = dist_fn(nu.rep, nv.rep)
        if is_separated(nu.dub, nv.dub, d, sigma):
            a, b = (u, v) if nu.rep < nv.rep else (v, u)
            out.pairs.append(WspdPair(a, b, nodes[a].dub, nodes[b].dub, d))
            continue
        if nu.is_leaf and nv.is_leaf:
            raise ValueError(f"vertices {nu.rep} and {nv.rep} cannot be separated (zero distance?)")
        if nv.is_leaf or (not nu.is_leaf and split_key(u) >= split_key(v)):
            big, other = u, v
        else:
            big, other = v, u
        for ch in reversed(nodes[big].children):
            stack.append(("pair", ch, other))
    return out


@dataclass
class WspdReport:
    problems: list[str]
    pairs_checked: int

    @property
    def ok(self) -> bool:
        return not self.problems


def verify_wspd(w: Wspd, dist: np.ndarray, max_n: int = 500, max_problems: int = 50) -> WspdReport:
    """Exhaustive check: exact coverage and separation with true diameters.

    ``dist`` is the graph distance matrix. Separation is re-checked with the
    real diameters of both sides and the graph distance between the
    representatives, which is stronger than the dub-based test.
    """
    t = w.tree
    n = t.n
    if n > max_n:
        raise ValueError(f"verify_wspd refused: n={n} exceeds guard {max_n}")
    problems: list[str] = []
    count = np.zeros((n, n), dtype=np.int64)
    members: dict[int, np.ndarray] = {}

    def mem(u: int) -> np.ndarray:
        if u not in members:
            members[u] = t.members(u)
        return members[u]

    for k, p in enumerate(w.pairs):
        A, B = mem(p.a), mem(p.b)
        ii, jj = np.meshgrid(A, B, indexing="ij")
        lo = np.minimum(ii, jj).ravel()
        hi = np.maximum(ii, jj).ravel()
        np.add.at(count, (lo, hi), 1)
        da = float(dist[np.ix_(A, A)].max())
        db = float(dist[np.ix_(B, B)].max())
        ra, rb = t.nodes[p.a].rep, t.nodes[p.b].rep
        if da > p.dub_a * (1 + 1e-9) + 1e-12 or db > p.dub_b * (1 + 1e-9) + 1e-12:
            problems.append(f"WSPD pair {k} ({ra},{rb}): dub below true diameter")
        dg = float(dist[ra, rb])
        if not is_separated(da, db, dg * (1 + 1e-12), w.sigma):
            problems.append(f"WSPD pair {k} ({ra},{rb}): not {w.sigma:g}-separated with true diameters")
        if len(problems) >= max_problems:
            break
    iu, ju = np.triu_indices(n, 1)
    c = count[iu, ju]
    for p, q in zip(iu[c == 0][:max_problems].tolist(), ju[c == 0][:max_problems].tolist()):
        problems.append(f"pair ({p},{q}) uncovered")
    for p, q in zip(iu[c > 1][:max_problems].tolist(), ju[c > 1][:max_problems].tolist()):
        problems.append(f"pair ({p},{q}) covered twice")
    if np.any(np.tril(count) != 0):
        problems.append("self pair covered")
    return WspdReport(problems, len(w.pairs))
