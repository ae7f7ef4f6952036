import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from treefold.plmap import (
    IncidenceMatrix,
    MapError,
    PLTreeMap,
    flat_tent_map,
    grid_points,
    identity_map,
    incidence_matrix,
    interval_map,
    markov_entropy,
    mfold_report,
    sawtooth_map,
    spectral_enclosure,
    tent_map,
    three_star_map,
)
from treefold.tree import interval_tree, star_tree

G = flat_tent_map()
T = G.tree
pt = lambda t: T.point("1", F(t))  # noqa: E731

CATALOG = [tent_map(), flat_tent_map(), sawtooth_map(3), sawtooth_map(4), three_star_map()]


def test_eval_examples():
    assert G(pt(F(1, 2))) == T.vertex("1")
    assert G(pt(F(1, 3))) == T.vertex("1")
    assert G(pt(F(1, 6))) == pt(F(1, 2))


def test_preimage_examples():
    half = G.preimages(pt(F(1, 2)))
    assert half.points == (pt(F(1, 6)), pt(F(5, 6))) and not half.intervals
    top = G.preimages(T.vertex("1"))
    assert not top.points and [(i.lo, i.hi) for i in top.intervals] == [(F(1, 3), F(2, 3))]
    assert top.count == math.inf
    bottom = G.preimages(T.vertex("0"))
    assert bottom.points == (T.vertex("0"), T.vertex("1"))


def test_extreme_preimages():
    assert G.extreme_preimages(pt(F(1, 2))) == (pt(F(1, 6)), pt(F(5, 6)))
    assert G.extreme_preimages(T.vertex("1")) == (pt(F(1, 3)), pt(F(2, 3)))
    ident = identity_map(star_tree(3))
    y = ident.tree.point("b", F(2, 7))
    assert ident.extreme_preimages(y) == (y, y)


def test_classify_preimage():
    assert G.classify_preimage(pt(F(1, 6))) == {"non_minimal": True, "non_maximal": True}
    with pytest.raises(MapError, match="vertex"):
        G.classify_preimage(pt(F(1, 3)))
    tent = tent_map()
    assert tent.classify_preimage(tent.tree.point("1", F(1, 4))) == {"non_minimal": True, "non_maximal": True}


def test_turning_point_is_one_sided():
    folded = interval_map([(0, F(1, 4)), (F(1, 2), F(3, 4)), (1, F(1, 4))])
    flags = folded.classify_preimage(folded.tree.point("1", F(1, 2)))
    assert flags == {"non_minimal": True, "non_maximal": False}


def test_incidence_examples():
    assert incidence_matrix(G).entries == ((1, 1, 1), (0, 0, 0), (1, 1, 1))
    assert incidence_matrix(tent_map()).entries == ((1, 1), (1, 1))
    assert incidence_matrix(identity_map(interval_tree())).entries == ((1,),)


def test_non_markov_rejected():
    f = interval_map([(0, 0), (F(1, 3), F(1, 2)), (1, 1)])
    with pytest.raises(MapError, match="not Markov"):
        incidence_matrix(f)


def test_entropy_examples():
    enc = spectral_enclosure(incidence_matrix(G))
    assert abs(enc.value - math.log(2)) < 1e-9 and enc.width <= 1e-9
    for m in (2, 3, 5):
        assert abs(markov_entropy([[1] * m] * m) - math.log(m)) < 1e-9
    assert markov_entropy([[0, 0], [0, 0]]) == 0
    assert markov_entropy([[0, 1], [0, 0]]) == 0
    assert abs(markov_entropy([[1, 1], [1, 0]]) - math.log((1 + 5 ** 0.5) / 2)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 3), min_size=4, max_size=4), min_size=4, max_size=4))
def test_entropy_transpose_and_numpy(rows):
    a = spectral_enclosure(rows)
    b = spectral_enclosure([list(c) for c in zip(*rows)])
    assert abs(a.value - b.value) <= 1e-9
    import numpy as np

    rho = max(abs(np.linalg.eigvals(np.array(rows, dtype=float))))
    assert a.rho_lower <= F(rho * (1 + 1e-12)) and F(rho * (1 - 1e-12)) <= a.rho_upper
    if rho >= 1:
        assert abs(a.value - math.log(rho)) < 1e-8


def test_catalog_markov_entropies():
    for m in range(2, 6):
        assert abs(markov_entropy(incidence_matrix(sawtooth_map(m))) - math.log(m)) < 1e-9
    assert abs(markov_entropy(incidence_matrix(three_star_map())) - math.log(3)) < 1e-9


def test_mfold_examples():
    inner = [pt(F(k, 100)) for k in range(1, 100)]
    assert mfold_report(G, 2, inner).passes
    tent = tent_map()
    assert mfold_report(tent, 2, [tent.tree.vertex("1")]).failures_m == [tent.tree.vertex("1")]
    ident = identity_map(interval_tree())
    assert not mfold_report(ident, 2, inner).passes_2


def test_discontinuous_map_rejected():
    tree = star_tree(2)
    rows = {
        "a": ((0, tree.vertex("o")), (1, tree.vertex("a"))),
        "b": ((0, tree.vertex("a")), (1, tree.vertex("b"))),
    }
    with pytest.raises(MapError, match="continuous"):
        PLTreeMap(tree, rows)


def test_surjectivity():
    assert all(f.is_surjective() for f in CATALOG)
    assert not interval_map([(0, 0), (1, F(1, 2))]).is_surjective()


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_preimages_are_exact_and_complete(data):
    f = data.draw(st.sampled_from(CATALOG))
    tree = f.tree
    e = data.draw(st.sampled_from(tree.edges))
    y = tree.point(e, data.draw(st.fractions(0, 1, max_denominator=50)))
    pre = f.preimages(y)
    for x in pre.candidates():
        assert f(x) == y
    for iv in pre.intervals:
        assert f(tree.point(iv.edge, (iv.lo + iv.hi) / 2)) == y
    lo, hi = f.extreme_preimages(y)
    for x in pre.candidates():
        assert not tree.precedes(x, lo) and not tree.precedes(hi, x)
    # grid oracle: every near-solution on a 1/1000 grid sits next to a returned component
    h = F(1, 1000)
    region = pre.as_pointset()
    for x in grid_points(tree, h):
        if tree.distance(f(x), y) < h:
            assert region.distance(x) <= h
