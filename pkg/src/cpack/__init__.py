"""Distance structures for c-packed geometric graphs.

WSPDs from c-connected trees, ring separators, a separator-hierarchy exact
distance oracle and dumbbell-tree covers for approximate distances.
"""
from __future__ import annotations

from .cct import CCTree, build_cct
from .edo import SeparatorHierarchy, build_hierarchy
from .geom import Cube, build_compressed_quadtree, normalize_to_unit_cube
from .graph import GeometricGraph, all_pairs, dijkstra, estimate_packedness, generate_family, read_graph
from .separator import build_separator
from .treecover import TreeCover, build_tree_cover
from .wspd import Wspd, build_wspd, verify_wspd

__all__ = [
    "CCTree",
    "Cube",
    "GeometricGraph",
    "SeparatorHierarchy",
    "TreeCover",
    "Wspd",
    "all_pairs",
    "build_cct",
    "build_compressed_quadtree",
    "build_hierarchy",
    "build_separator",
    "build_tree_cover",
    "build_wspd",
    "dijkstra",
    "estimate_packedness",
    "generate_family",
    "normalize_to_unit_cube",
    "read_graph",
    "verify_wspd",
]

__version__ = "0.1.0"
