"""JSON files for trees, maps, shift systems and branch graphs.

Rationals are written as ``"p/q"`` strings so that files round-trip
exactly.  Points are written as a vertex id or ``"edge:t"``; on input the
edge may also be given as ``"parent-child"``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .plmap import PLTreeMap
from .pointsets import PointSet
from .tree import Point, Tree, TreeError, as_fraction, build_tree


class FormatError(ValueError):
    pass


def rational(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise FormatError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"not a rational: {value!r}") from exc
    raise FormatError(f"not a rational: {value!r} (write floats as 'p/q')")


def point_to_str(x: Point) -> str:
    return str(x)


def parse_point(tree: Tree, text: str) -> Point:
    text = text.strip()
    if ":" not in text:
        if text != tree.root and text not in tree.parent:
            raise FormatError(f"unknown vertex {text!r}")
        return tree.vertex(text)
    edge, t = text.rsplit(":", 1)
    if edge not in tree.parent and "-" in edge:
        u, v = edge.split("-", 1)
        if tree.parent.get(v) == u:
            edge = v
        elif tree.parent.get(u) == v:
            edge = u
            return tree.point(edge, 1 - rational(t))
        else:
            raise FormatError(f"{edge!r} is not an edge")
    if edge not in tree.parent:
        raise FormatError(f"unknown edge {edge!r}")
    try:
        return tree.point(edge, rational(t))
    except TreeError as exc:
        raise FormatError(str(exc)) from exc


# -- trees ---------------------------------------------------------------------------
def tree_to_dict(tree: Tree) -> dict:
    return {
        "root": tree.root,
        "edges": [
            {"child": v, "parent": tree.parent[v], "index": tree.index[v], "length": str(tree.length[v])}
            for v in tree.edges
        ],
    }


def tree_from_dict(data: Mapping) -> Tree:
    try:
        rows = data["edges"]
        return build_tree(
            data["root"],
            {r["child"]: r["parent"] for r in rows},
            {r["child"]: int(r["index"]) for r in rows},
            {r["child"]: rational(r.get("length", "1")) for r in rows},
        )
    except KeyError as exc:
        raise FormatError(f"tree file missing field {exc}") from exc


# -- maps ----------------------------------------------------------------------------
def map_to_dict(fmap: PLTreeMap) -> dict:
    return {
        "name": fmap.name,
        "breaks": {e: [[str(t), point_to_str(img)] for t, img in fmap.breaks[e]] for e in fmap.tree.edges},
    }


def map_from_dict(tree: Tree, data: Mapping) -> PLTreeMap:
    try:
        breaks = {
            e: tuple((rational(t), parse_point(tree, p)) for t, p in rows) for e, rows in data["breaks"].items()
        }
    except KeyError as exc:
        raise FormatError(f"map file missing field {exc}") from exc
    return PLTreeMap(tree, breaks, name=data.get("name", ""))


# -- point sets and shift systems ----------------------------------------------------------
def pointset_to_dict(ps: PointSet) -> dict:
    return ps.describe()


def pointset_from_dict(tree: Tree, data: Mapping) -> PointSet:
    from .pointsets import Interval

    pts = tuple(parse_point(tree, p) for p in data.get("points", []))
    ivs = tuple(Interval(e, rational(a), rational(b)) for e, a, b in data.get("intervals", []))
    return PointSet(tree, pts, ivs)


def system_to_dict(system) -> dict:
    return {"eps": str(system.eps), "sets": [pointset_to_dict(h) for h in system.sets]}


def system_from_dict(tree: Tree, data: Mapping):
    from .shift import ShiftSystem

    return ShiftSystem(tree, tuple(pointset_from_dict(tree, h) for h in data["sets"]), rational(data.get("eps", 0)))


# -- files -------------------------------------------------------------------------------
def read_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def load_tree(path) -> Tree:
    return tree_from_dict(read_json(path))


def load_map(tree_path, map_path) -> PLTreeMap:
    tree = load_tree(tree_path)
    return map_from_dict(tree, read_json(map_path))


def save_map(fmap: PLTreeMap, tree_path, map_path) -> None:
    write_json(tree_path, tree_to_dict(fmap.tree))
    write_json(map_path, map_to_dict(fmap))


def to_jsonable(obj: Any) -> Any:
    """Fractions to ``"p/q"``, points to strings, containers recursively."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Point):
        return str(obj)
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = list(obj)
        if isinstance(obj, (set, frozenset)):
            items = sorted(items, key=str)
        return [to_jsonable(v) for v in items]
    if isinstance(obj, float) and obj != obj:
        return None
    if isinstance(obj, float) and obj in (float("inf"), float("-inf")):
        return "inf" if obj > 0 else "-inf"
    return obj


__all__ = [
    "FormatError",
    "rational",
    "parse_point",
    "tree_to_dict",
    "tree_from_dict",
    "map_to_dict",
    "map_from_dict",
    "pointset_from_dict",
    "system_from_dict",
    "system_to_dict",
    "load_tree",
    "load_map",
    "save_map",
    "read_json",
    "write_json",
    "to_jsonable",
    "as_fraction",
]
