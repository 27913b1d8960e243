from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cpack import _kernels as K

pytestmark = pytest.mark.skipif(not K.HAS_NUMBA, reason="numba not importable")

coords = arrays(np.float64, (12, 2), elements=st.floats(-2, 2, allow_nan=False, width=32))


def sampled_box_length(p, q, lo, hi, steps=20001):
    t = np.linspace(0.0, 1.0, steps)
    pts = p[None, :] + t[:, None] * (q - p)[None, :]
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    return inside.mean() * np.linalg.norm(q - p)


def test_clip_box_axis_segment():
    p = np.array([[-1.0, 0.5]])
    q = np.array([[2.0, 0.5]])
    out = K.clip_box(p, q, np.zeros(2), np.ones(2))
    assert out[0] == pytest.approx(1.0)


def test_clip_box_outside_and_diagonal():
    p = np.array([[2.0, 2.0], [0.0, 0.0]])
    q = np.array([[3.0, 3.0], [1.0, 1.0]])
    out = K.clip_box(p, q, np.zeros(2), np.ones(2))
    assert out[0] == 0.0
    assert out[1] == pytest.approx(math.sqrt(2))


def test_clip_box_matches_sampling():
    rng = np.random.default_rng(3)
    p = rng.uniform(-1, 2, (30, 2))
    q = rng.uniform(-1, 2, (30, 2))
    lo, hi = np.array([0.0, 0.2]), np.array([0.7, 1.0])
    got = K.clip_box(p, q, lo, hi)
    want = [sampled_box_length(a, b, lo, hi) for a, b in zip(p, q)]
    np.testing.assert_allclose(got, want, atol=5e-4 * 3)


@settings(max_examples=60, deadline=None)
@given(coords, coords)
def test_clip_box_paths_agree(p, q):
    lo, hi = np.array([-0.5, -0.25]), np.array([0.75, 1.0])
    np.testing.assert_allclose(K.clip_box_numpy(p, q, lo, hi), K.clip_box_numba(p, q, lo, hi), rtol=1e-9, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(coords, coords, st.floats(0.01, 3.0))
def test_ball_lengths_paths_agree(p, q, r):
    c = np.array([0.1, -0.2])
    radii = np.array([r / 2, r])
    np.testing.assert_allclose(
        K.ball_lengths_numpy(p, q, c, radii), K.ball_lengths_numba(p, q, c, radii), rtol=1e-9, atol=1e-12
    )


def test_ball_lengths_unit_segment():
    p = np.array([[0.0, 0.0]])
    q = np.array([[1.0, 0.0]])
    out = K.ball_lengths(p, q, np.array([0.5, 0.0]), np.array([0.25, 0.5, 2.0]))
    np.testing.assert_allclose(out, [0.5, 1.0, 1.0])


def test_floyd_warshall_paths_agree():
    rng = np.random.default_rng(1)
    w = rng.uniform(1, 5, (15, 15))
    w[rng.random((15, 15)) < 0.6] = np.inf
    w = np.minimum(w, w.T)
    np.fill_diagonal(w, 0)
    np.testing.assert_array_equal(K.floyd_warshall_numpy(w), K.floyd_warshall_numba(w))


def test_greedy_color_paths_agree():
    rng = np.random.default_rng(2)
    adj = rng.random((40, 40)) < 0.2
    adj = adj | adj.T
    np.fill_diagonal(adj, False)
    a, b = K.greedy_color_numpy(adj), K.greedy_color_numba(adj)
    np.testing.assert_array_equal(a, b)
    i, j = np.nonzero(adj)
    assert np.all(a[i] != a[j])


def test_greedy_color_triangle():
    adj = np.ones((3, 3), dtype=bool)
    np.fill_diagonal(adj, False)
    assert K.greedy_color(adj).tolist() == [0, 1, 2]


def two_path_network():
    # s=0 -> 1 -> 3=t and s -> 2 -> t, unit capacities; arcs paired as (e, e^1)
    arcs = [(0, 1), (1, 3), (0, 2), (2, 3)]
    tails, heads, caps = [], [], []
    for u, v in arcs:
        tails += [u, v]
        heads += [v, u]
        caps += [1, 0]
    tails = np.array(tails)
    order = np.argsort(tails, kind="stable")
    start = np.searchsorted(tails[order], np.arange(5))
    return np.array(heads), np.array(caps), start, order


def test_edmonds_karp_two_paths():
    heads, caps, start, order = two_path_network()
    f1, r1 = K.edmonds_karp_python(heads, caps, start, order, 0, 3)
    f2, r2 = K.edmonds_karp_numba(heads, caps, start, order, 0, 3)
    assert f1 == f2 == 2
    np.testing.assert_array_equal(r1, r2)


def test_disable_flag_selects_fallback():
    code = "from cpack import _kernels as K; print(K.USE_NUMBA)"
    env = dict(os.environ, CPACK_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
