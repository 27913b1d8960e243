from __future__ import annotations

import warnings

import pytest

from cpack.graph import all_pairs, generate_family


@pytest.fixture(scope="session")
def family_cache():
    """Memoised (graph, c, distance matrix) per (kind, n)."""
    cache = {}

    def get(kind, n, seed=0):
        key = (kind, n, seed)
        if key not in cache:
            g, c = generate_family(kind, n, seed)
            cache[key] = (g, c, all_pairs(g))
        return cache[key]

    return get


@pytest.fixture(autouse=True)
def _quiet_c_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="declared c=")
        warnings.filterwarnings("ignore", message="flow .* exceeds 2c")
        yield
