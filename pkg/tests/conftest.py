import sys
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from treefold.tree import Point, Tree, build_tree, interval_tree, star_tree


def y_tree() -> Tree:
    return build_tree("v0", {"b": "v0", "u1": "b", "u2": "b"}, {"b": 1, "u1": 1, "u2": 2}, {"b": 1, "u1": 1, "u2": 1})


def bushy_tree() -> Tree:
    """Two levels of branching plus a valence-two vertex."""
    parent = {"a": "r", "b": "r", "c": "a", "d": "a", "e": "a", "f": "b", "g": "f", "h": "f"}
    index = {"a": 1, "b": 2, "c": 1, "d": 2, "e": 3, "f": 1, "g": 1, "h": 2}
    length = {"a": 1, "b": 2, "c": Fraction(1, 2), "d": 1, "e": 3, "f": 1, "g": 1, "h": Fraction(3, 2)}
    return build_tree("r", parent, index, length)


TREES = {
    "interval": interval_tree(),
    "y": y_tree(),
    "star3": star_tree(3),
    "star5": star_tree(5),
    "bushy": bushy_tree(),
}


@st.composite
def random_trees(draw, max_vertices: int = 9):
    n = draw(st.integers(2, max_vertices))
    parent, index, length = {}, {}, {}
    kids = {"v0": 0}
    for k in range(1, n):
        name = f"v{k}"
        p = draw(st.sampled_from(sorted(kids)))
        kids[p] += 1
        kids[name] = 0
        parent[name] = p
        index[name] = kids[p]
        length[name] = draw(st.fractions(Fraction(1, 4), 3, max_denominator=8))
    return build_tree("v0", parent, index, length)


@st.composite
def points_on(draw, tree: Tree):
    if draw(st.booleans()) and draw(st.booleans()):
        return tree.vertex(draw(st.sampled_from(sorted(tree.vertices))))
    e = draw(st.sampled_from(sorted(tree.edges)))
    t = draw(st.fractions(0, 1, max_denominator=24))
    return tree.point(e, t)


@pytest.fixture
def ytree():
    return y_tree()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
