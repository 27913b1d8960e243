from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpack.graph import (
    FAMILIES,
    GeometricGraph,
    GraphFormatError,
    all_pairs,
    dijkstra,
    estimate_packedness,
    floyd_warshall,
    format_graph,
    generate_family,
    induced_subgraph,
    parse_graph,
)


def path3():
    return GeometricGraph.from_edges([[0, 0], [1, 0], [2, 0]], [[0, 1], [1, 2]])


def cycle4():
    return GeometricGraph.from_edges([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1], [1, 2], [2, 3], [3, 0]])


def random_grid_graph(seed, k=6, rows=5):
    rng = np.random.default_rng(seed)
    xs, ys = np.meshgrid(np.arange(k), np.arange(rows), indexing="ij")
    coords = np.column_stack([xs.ravel(), ys.ravel()]) + rng.uniform(-0.3, 0.3, (k * rows, 2))
    edges = []
    for i in range(k):
        for j in range(rows):
            v = i * rows + j
            if i + 1 < k and (j == 0 or rng.random() < 0.7):
                edges.append((v, v + rows))
            if j + 1 < rows:
                edges.append((v, v + 1))
    return GeometricGraph.from_edges(coords, edges)


def test_dijkstra_path():
    dist, pred = dijkstra(path3(), 0)
    assert dist.tolist() == [0, 1, 2]
    assert pred.tolist() == [-1, 0, 1]


def test_dijkstra_cycle():
    assert dijkstra(cycle4(), 0)[0].tolist() == [0, 1, 2, 1]


def test_dijkstra_unreachable_reported():
    g = GeometricGraph.from_edges([[0, 0], [1, 0], [5, 5]], [[0, 1]])
    dist, pred = dijkstra(g, 0)
    assert math.isinf(dist[2]) and pred[2] == -1


@pytest.mark.parametrize("seed", range(5))
def test_dijkstra_matches_floyd_warshall(seed):
    g = random_grid_graph(seed)
    assert g.n == 30
    np.testing.assert_allclose(all_pairs(g), floyd_warshall(g), rtol=1e-12)


def test_all_pairs_small_examples():
    assert all_pairs(path3()).tolist() == [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    assert all_pairs(cycle4())[0].tolist() == [0, 1, 2, 1]


def test_all_pairs_guard():
    g, _ = generate_family("path", 30)
    with pytest.raises(ValueError, match="guard"):
        all_pairs(g, max_n=10)


@pytest.mark.parametrize("kind, n", [("path", 40), ("grid", 36), ("star", 15), ("spiral", 60)])
def test_distmatrix_is_metric_and_dominates_euclid(kind, n):
    g, _ = generate_family(kind, n)
    D = all_pairs(g)
    np.testing.assert_allclose(D, D.T, rtol=1e-9)
    assert np.all(np.diag(D) == 0)
    tri = D[:, :, None] + D[None, :, :]  # D[i,k] + D[k,j] indexed [i,k,j]
    assert np.all(D[:, None, :] <= tri * (1 + 1e-9))
    E = np.linalg.norm(g.coords[:, None] - g.coords[None], axis=2)
    assert np.all(E <= D * (1 + 1e-12) + 1e-12)


def test_estimator_single_segment():
    g = GeometricGraph.from_edges([[0, 0], [1, 0]], [[0, 1]])
    assert estimate_packedness(g) == pytest.approx(2.0)


def test_estimator_two_far_segments():
    g = GeometricGraph.from_edges([[0, 0], [1, 0], [100, 0], [101, 0]], [[0, 1], [2, 3]])
    assert estimate_packedness(g) == pytest.approx(2.0)


@pytest.mark.parametrize("k", [3, 4, 7])
def test_estimator_star(k):
    g, c = generate_family("star", k)
    assert c == k
    assert estimate_packedness(g) >= k - 1e-12


def test_estimator_empty_and_budget():
    g = GeometricGraph.from_edges([[0, 0]], np.zeros((0, 2), dtype=int))
    assert estimate_packedness(g) == 0.0
    with pytest.raises(ValueError):
        estimate_packedness(path3(), 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(1, 500))
def test_estimator_sound_on_path(n, budget):
    g, c = generate_family("path", n)
    assert estimate_packedness(g, budget) <= c + 1e-12


def test_family_path():
    g, c = generate_family("path", 5)
    assert c == 2 and g.n == 5 and g.m == 4
    np.testing.assert_array_equal(g.coords[:, 0], np.arange(5))
    assert np.all(g.lengths == 1)


def test_family_star_bound_agrees():
    g, c = generate_family("star", 4)
    assert g.n == 5 and c == 4
    assert estimate_packedness(g) >= 4 - 1e-12


def test_family_spiral_reports_estimator():
    g, c = generate_family("spiral", 100)
    assert g.n == 100 and g.is_connected()
    assert c == pytest.approx(estimate_packedness(g, 20_000))
    np.testing.assert_allclose(g.lengths, 1.0, rtol=0.02)


def test_family_grid_stress_bound():
    g, c = generate_family("grid", 36)
    assert g.n == 36 and c == 24
    assert estimate_packedness(g) <= c


@pytest.mark.parametrize("kind", FAMILIES)
def test_families_deterministic(kind):
    a, ca = generate_family(kind, 20, seed=7)
    b, cb = generate_family(kind, 20, seed=7)
    assert ca == cb
    np.testing.assert_array_equal(a.coords, b.coords)


def test_family_errors():
    with pytest.raises(ValueError):
        generate_family("torus", 10)
    with pytest.raises(ValueError):
        generate_family("path", 1)


def test_graph_validation():
    with pytest.raises(ValueError, match="self-loop"):
        GeometricGraph.from_edges([[0, 0], [1, 0]], [[0, 0]])
    with pytest.raises(ValueError, match="duplicate"):
        GeometricGraph.from_edges([[0, 0], [1, 0]], [[0, 1], [1, 0]])
    with pytest.raises(ValueError, match="disagree"):
        GeometricGraph.from_edges([[0, 0], [1, 0]], [[0, 1]], lengths=[2.0])
    g = GeometricGraph.from_edges([[0, 0], [3, 4]], [[0, 1]], lengths=[5.0])
    assert g.lengths.tolist() == [5.0]


def test_format_round_trip():
    g, _ = generate_family("spiral", 30)
    h = parse_graph(format_graph(g))
    np.testing.assert_array_equal(g.coords, h.coords)
    np.testing.assert_array_equal(g.edges, h.edges)


def test_parse_with_comments():
    text = "# header follows\nd 2 n 2 m 1\nv 0 0 0  # origin\nv 1 1 0\n\ne 0 1\n"
    g = parse_graph(text)
    assert g.n == 2 and g.lengths.tolist() == [1.0]


@pytest.mark.parametrize(
    "text, line",
    [
        ("d 2 n 2\n", 1),
        ("d 2 n 2 m 1\nv 0 0\n", 2),
        ("d 2 n 2 m 1\nv 0 0 0\nv 1 1 0\ne 0 5\n", 4),
        ("d 2 n 2 m 1\nv 0 0 0\nv 0 1 0\n", 3),
        ("d 2 n 1 m 0\nv 0 nan 0\n", 2),
        ("d 2 n 1 m 0\nx 0\n", 2),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(GraphFormatError) as err:
        parse_graph(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_parse_count_mismatch():
    with pytest.raises(GraphFormatError, match="declares 2 edges"):
        parse_graph("d 2 n 2 m 2\nv 0 0 0\nv 1 1 0\ne 0 1\n")


def test_induced_subgraph():
    g, _ = generate_family("path", 6)
    sub = induced_subgraph(g, [1, 2, 4])
    assert sub.n == 3 and sub.edges.tolist() == [[0, 1]]
