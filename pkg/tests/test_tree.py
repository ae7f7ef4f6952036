from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import TREES, points_on, random_trees, y_tree
from oracles import arc_length_by_vertices, brute_order
from treefold.tree import (
    EQUAL,
    GREATER,
    LESS,
    TreeError,
    build_tree,
    f_adjust_numbering,
    interval_tree,
    star_tree,
)


# -- construction --------------------------------------------------------------
def test_single_edge_has_two_endpoints():
    t = interval_tree()
    assert t.branchpoints == frozenset()
    assert t.endpoints == {"0", "1"}


def test_y_tree_branchpoint(ytree):
    assert ytree.branchpoints == {"b"}
    assert ytree.level == {"v0": 0, "b": 1, "u1": 2, "u2": 2}
    assert ytree.children["b"] == ("u1", "u2")


def test_gapped_indices_rejected():
    with pytest.raises(TreeError, match="gapped branch indices"):
        build_tree("v0", {"b": "v0", "u1": "b", "u2": "b"}, {"b": 1, "u1": 1, "u2": 3}, {"b": 1, "u1": 1, "u2": 1})


def test_duplicate_indices_rejected():
    with pytest.raises(TreeError, match="duplicate"):
        build_tree("v0", {"b": "v0", "u1": "b", "u2": "b"}, {"b": 1, "u1": 1, "u2": 1}, {"b": 1, "u1": 1, "u2": 1})


def test_cycle_rejected():
    with pytest.raises(TreeError, match="cycle"):
        build_tree("v0", {"a": "b", "b": "a", "c": "v0"}, {"a": 1, "b": 1, "c": 1}, {"a": 1, "b": 1, "c": 1})


def test_nonpositive_length_rejected():
    with pytest.raises(TreeError, match="non-positive"):
        build_tree("v0", {"a": "v0"}, {"a": 1}, {"a": 0})


def test_floats_refused():
    with pytest.raises(TypeError):
        interval_tree().point("1", 0.5)


def test_endpoint_positions_canonicalize(ytree):
    assert ytree.point("b", 0) == ytree.vertex("v0")
    assert ytree.point("u1", 1) == ytree.vertex("u1")
    assert ytree.point("u1", 0) == ytree.point("u2", 0) == ytree.vertex("b")


# -- addresses -----------------------------------------------------------------
def test_address_examples(ytree):
    a = ytree.address(ytree.point("b", F(1, 2)))
    assert a.indices == (1,) and a.tail_edge == "b"
    assert ytree.address(ytree.point("u2", F(1, 3))).indices == (1, 2)
    vb = ytree.address(ytree.vertex("b"))
    assert vb.indices == (1,) and vb.is_vertex
    assert ytree.address(ytree.vertex("v0")).is_root


# -- order ---------------------------------------------------------------------
def test_order_examples(ytree):
    x1 = ytree.point("u1", F(1, 2))
    x2 = ytree.point("u2", F(1, 5))
    assert ytree.order_cmp(ytree.vertex("v0"), x1) == LESS
    assert ytree.order_cmp(x1, x2) == LESS
    assert ytree.order_cmp(ytree.vertex("b"), x1) == LESS
    assert ytree.order_cmp(x2, x2) == EQUAL
    assert ytree.order_cmp(ytree.vertex("u2"), ytree.vertex("u1")) == GREATER


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_order_matches_literal_rules(data):
    tree = data.draw(st.one_of(st.sampled_from(list(TREES.values())), random_trees()))
    x = data.draw(points_on(tree))
    y = data.draw(points_on(tree))
    assert tree.order_cmp(x, y) == brute_order(tree, x, y)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_order_is_strict_total(data):
    tree = data.draw(st.one_of(st.sampled_from(list(TREES.values())), random_trees()))
    x, y, z = (data.draw(points_on(tree)) for _ in range(3))
    c = tree.order_cmp(x, y)
    assert c == -tree.order_cmp(y, x)
    assert (c == EQUAL) == (x == y)
    if tree.precedes(x, y) and tree.precedes(y, z):
        assert tree.precedes(x, z)


def test_outgoing_branches_are_ordered():
    tree = TREES["bushy"]
    for v in tree.vertices:
        kids = tree.children[v]
        for i, c1 in enumerate(kids):
            for c2 in kids[i + 1:]:
                below = [p for p in _branch_samples(tree, c1)]
                above = [p for p in _branch_samples(tree, c2)]
                assert all(tree.precedes(p, q) for p in below for q in above)


def _branch_samples(tree, top):
    stack, out = [top], []
    while stack:
        e = stack.pop()
        out.extend(tree.point(e, F(k, 5)) for k in range(1, 6))
        stack.extend(tree.children[e])
    return out


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_limits_of_ordered_sequences(data):
    tree = data.draw(st.sampled_from(list(TREES.values())))
    e1, e2 = data.draw(st.sampled_from(tree.edges)), data.draw(st.sampled_from(tree.edges))
    t1, t2 = (data.draw(st.fractions(F(1, 10), F(9, 10), max_denominator=20)) for _ in range(2))
    s1, s2 = data.draw(st.sampled_from([-1, 1])), data.draw(st.sampled_from([-1, 1]))
    x, xp = tree.point(e1, t1), tree.point(e2, t2)
    seq = [(tree.point(e1, t1 + s1 * F(1, 20 * i)), tree.point(e2, t2 + s2 * F(1, 20 * i))) for i in range(1, 40)]
    if all(tree.precedes(a, b) for a, b in seq):
        assert tree.precedes(x, xp) or x == xp


# -- hull and distance -----------------------------------------------------------
def test_hull_examples(ytree):
    x = ytree.point("u1", F(1, 3))
    assert ytree.hull(x, x).degenerate
    arc = ytree.hull(ytree.vertex("u1"), ytree.vertex("u2"))
    assert [(s.edge, s.start, s.end) for s in arc.segments] == [("u1", 1, 0), ("u2", 0, 1)]
    t = interval_tree()
    assert t.hull(t.point("1", F(1, 4)), t.point("1", F(3, 4))).length == F(1, 2)


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_distance_matches_vertex_oracle(data):
    tree = data.draw(st.one_of(st.sampled_from(list(TREES.values())), random_trees()))
    x, y = data.draw(points_on(tree)), data.draw(points_on(tree))
    d = tree.distance(x, y)
    assert d == arc_length_by_vertices(tree, x, y)
    assert d == tree.distance(y, x)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_arc_parametrization_roundtrip(data):
    tree = data.draw(st.one_of(st.sampled_from(list(TREES.values())), random_trees()))
    x, y = data.draw(points_on(tree)), data.draw(points_on(tree))
    arc = tree.hull(x, y)
    s = data.draw(st.fractions(0, 1, max_denominator=30))
    p = tree.point_on_arc(arc, s)
    if not arc.degenerate:
        assert tree.arc_parameter(arc, p) == s
        assert tree.distance(x, p) + tree.distance(p, y) == tree.distance(x, y)
    else:
        assert p == x


# -- f-adjusted numbering ---------------------------------------------------------
class _Fixing:
    """Stand-in map fixing every vertex."""

    def eval(self, x):
        return x

    def germ_is_monotone(self, y, index):
        return True


def test_adjust_without_fixed_branchpoints_is_identity():
    t = interval_tree()
    assert f_adjust_numbering(t, _Fixing()).index == t.index


def test_adjust_moves_monotone_edges_first():
    t = star_tree(3)
    override = {("o", "a"): True, ("o", "b"): False, ("o", "c"): True}
    out = f_adjust_numbering(t, _Fixing(), override)
    assert out.index == {"a": 1, "c": 2, "b": 3}


def test_adjust_all_monotone_keeps_order():
    t = star_tree(4)
    assert f_adjust_numbering(t, _Fixing()).index == t.index
