"""Compare the numba kernels with their numpy/Python fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is called once
to trigger compilation before timing; outputs of the two paths are checked
for agreement.
"""
from __future__ import annotations

import argparse
from timeit import default_timer as timer

import numpy as np

from cpack import _kernels as K
from cpack.graph import generate_family
from cpack.separator import _flow_network, ring_separator


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = timer()
        out = fn()
        best = min(best, timer() - t0)
    return best, out


def cases(scale: int):
    rng = np.random.default_rng(0)
    m = 2000 * scale
    p = rng.random((m, 2))
    q = p + rng.normal(scale=0.05, size=(m, 2))
    lo, hi = np.array([0.3, 0.3]), np.array([0.6, 0.6])
    yield "clip_box", (lambda: K.clip_box_numpy(p, q, lo, hi)), (lambda: K.clip_box_numba(p, q, lo, hi))

    radii = np.sort(rng.random(200))
    c = np.array([0.5, 0.5])
    yield "ball_lengths", (lambda: K.ball_lengths_numpy(p, q, c, radii)), (lambda: K.ball_lengths_numba(p, q, c, radii))

    g, _ = generate_family("grid", 100 * scale)
    w = np.full((g.n, g.n), np.inf)
    np.fill_diagonal(w, 0)
    w[g.edges[:, 0], g.edges[:, 1]] = g.lengths
    w[g.edges[:, 1], g.edges[:, 0]] = g.lengths
    yield "floyd_warshall", (lambda: K.floyd_warshall_numpy(w)), (lambda: K.floyd_warshall_numba(w))

    k = 300 * scale
    adj = rng.random((k, k)) < 0.05
    adj = adj | adj.T
    np.fill_diagonal(adj, False)
    yield "greedy_color", (lambda: K.greedy_color_numpy(adj)), (lambda: K.greedy_color_numba(adj))

    g, _ = generate_family("grid", 400 * scale)
    ring = ring_separator(g)
    _, heads, caps, start, order, s, t = _flow_network(g, ring)
    yield (
        "edmonds_karp",
        (lambda: K.edmonds_karp_python(heads, caps, start, order, s, t)[0]),
        (lambda: K.edmonds_karp_numba(heads, caps, start, order, s, t)[0]),
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not K.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':<16}{'numpy_ms':>12}{'numba_ms':>12}{'speedup':>10}  agree")
    for name, slow, fast in cases(args.scale):
        fast()  # compile / load from cache
        ts, a = best_of(slow, args.repeat)
        tf, b = best_of(fast, args.repeat)
        agree = np.allclose(a, b, rtol=1e-9, atol=1e-12)
        print(f"{name:<16}{ts * 1e3:>12.2f}{tf * 1e3:>12.2f}{ts / tf:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
