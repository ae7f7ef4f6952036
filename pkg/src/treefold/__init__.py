"""Exact computations for entropy of m-fold tree maps."""

from . import branch, catalog, io, periodic, plmap, pointsets, sections, shift, tree
from .catalog import catalog as catalog_entries, get_entry, map_entropy, prop12_map, verify_main_theorem
from .plmap import PLTreeMap, interval_map, mfold_report, sawtooth_map, tent_map
from .tree import Point, Tree, build_tree, interval_tree, star_tree

__version__ = "0.1.0"

__all__ = [
    "branch",
    "catalog",
    "io",
    "periodic",
    "plmap",
    "pointsets",
    "sections",
    "shift",
    "tree",
    "catalog_entries",
    "get_entry",
    "map_entropy",
    "prop12_map",
    "verify_main_theorem",
    "PLTreeMap",
    "interval_map",
    "mfold_report",
    "sawtooth_map",
    "tent_map",
    "Point",
    "Tree",
    "build_tree",
    "interval_tree",
    "star_tree",
]
