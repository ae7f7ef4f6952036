import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_color_words, brute_cut_ends, brute_stumps
from treefold.branch import (
    BranchGraph,
    BranchGraphError,
    build_branch_graph,
    color_count_table,
    count_color_words,
    cut_end_injection,
    cut_ends,
    edge_bits,
    find_forbidden_word,
    full_binary_stump,
    has_monochrome_constraint,
    m_bound,
    p_bound,
    closed_form_p,
    path_stump,
    random_branch_graph,
    random_graphs,
    stump_count,
    stump_cut_end_audit,
    stumps,
    validate_branch_graph,
    verify_counting_bounds,
)
from treefold.plmap import PLTreeMap
from treefold.pointsets import PointSet
from treefold.shift import ShiftSystem
from treefold.tree import star_tree

G = BranchGraph.make
BOTH_LOOP = G([(1, True, "1m")], [(1, 1)])
SINGLE_1 = G([(1, True, "1")], [(1, 1)])
TWO_LOOP = G([(1, True, "1"), (2, True, "1m")], [(1, 2), (2, 1)])
# a nonmonotone hub feeding two monochrome monotone germs that feed it back
HUB = G([(0, False, "m"), (1, True, "1"), (2, True, "m")], [(0, 1), (0, 2), (1, 0), (2, 0)])


def rules(graph):
    return {v.rule for v in validate_branch_graph(graph)}


# -- validation -----------------------------------------------------------------------
def test_bichromatic_self_loop_rejected():
    assert rules(BOTH_LOOP) == {"monotone loop without monochrome vertex"}


def test_valid_examples_pass():
    for g in (SINGLE_1, TWO_LOOP, HUB):
        assert validate_branch_graph(g) == []


def test_nonmonotone_colors_follow_index():
    assert rules(G([(0, False, "1")], [])) == {"nonmonotone vertex with wrong colors"}
    assert rules(G([(2, False, "m")], [])) == {"nonmonotone vertex with wrong colors"}
    assert validate_branch_graph(G([(0, False, "m"), (2, False, "1")], [])) == []


def test_degree_rules():
    assert "monotone vertex with outdegree above 1" in rules(G([(1, True, "1"), (2, True, "m"), (3, True, "m")], [(1, 2), (1, 3)]))
    three_in = G([(0, False, "m"), (1, True, "1"), (2, True, "m"), (3, True, "1")], [(1, 0), (2, 0), (3, 0)])
    assert "indegree above 2" in rules(three_in)
    same_color = G([(1, True, "1"), (2, True, "1"), (3, True, "1m")], [(1, 3), (2, 3)])
    assert "two predecessors not monotone monochrome of distinct colors" in rules(same_color)
    with_nonmono = G([(0, False, "m"), (1, True, "1"), (3, True, "1m")], [(0, 3), (1, 3)])
    assert "two predecessors not monotone monochrome of distinct colors" in rules(with_nonmono)


def test_loops_and_q():
    assert TWO_LOOP.monotone_loops() == [(1, 2)]
    assert TWO_LOOP.q == 2
    assert HUB.q == 0


# -- counting -------------------------------------------------------------------------
def test_both_colors_unconstrained():
    # the rule checker flags this graph, but counting still applies
    assert [c.N for c in color_count_table(BOTH_LOOP, 8)] == [2 ** n for n in range(1, 9)]


def test_single_color():
    assert [c.N for c in color_count_table(SINGLE_1, 5)] == [1] * 5
    assert find_forbidden_word(SINGLE_1, 5) == "m"


def test_two_loop():
    assert find_forbidden_word(TWO_LOOP, 6) == "mm"
    # one parity class of positions is pinned to "1"
    assert [c.N for c in color_count_table(TWO_LOOP, 7)] == [2, 3, 5, 7, 11, 15, 23]


def test_no_forbidden_word_when_complete():
    assert find_forbidden_word(BOTH_LOOP, 10) is None


def test_sufficient_p():
    assert [closed_form_p(l) for l in (1, 2, 3, 4)] == [5, 7, 8, 8]
    for l in (1, 2, 3, 4):
        p = closed_form_p(l)
        assert l * (1 + 6 * p) < 2 ** p
        assert not l * (1 + 6 * (p - 1)) < 2 ** (p - 1)


def test_bounds_at_p_zero():
    assert p_bound(3, 0) == 1 and m_bound(3, 0) == 6
    cc = count_color_words(TWO_LOOP, 1)
    assert set(cc.P.values()) == {1}
    assert cc.M == cc.P


def _check_against_oracle(g, n):
    N, P, M, S, words = brute_color_words(g, n)
    cc = count_color_words(g, n)
    assert cc.N == N
    for key in cc.P:
        assert cc.P[key] == P.get(key, 0)
        assert cc.M[key] == M.get(key, 0)
        assert cc.S[key] == S.get(key, 0)


@pytest.mark.parametrize("g", [SINGLE_1, TWO_LOOP, HUB, BOTH_LOOP])
def test_counts_match_path_listing(g):
    for n in range(1, 11):
        _check_against_oracle(g, n)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4), st.integers(1, 9))
def test_random_counts_match_path_listing(seed, ell, n):
    g = random_branch_graph(random.Random(seed), ell)
    assert validate_branch_graph(g) == []
    _check_against_oracle(g, n)


def test_forbidden_word_is_shortlex_least():
    rng = random.Random(5)
    for _ in range(40):
        g = random_branch_graph(rng, rng.randint(1, 3))
        w = find_forbidden_word(g, 8)
        present = set()
        for n in range(1, 9):
            present |= brute_color_words(g, n)[4]
        from itertools import product

        expect = None
        for n in range(1, 9):
            for tup in product("1m", repeat=n):
                if "".join(tup) not in present:
                    expect = "".join(tup)
                    break
            if expect:
                break
        assert w == expect


def test_random_graph_bounds():
    gs = random_graphs(10 ** 4, max_ell=4, seed=11)
    assert all(validate_branch_graph(g) == [] for g in gs[:500])
    bad = sum(len(verify_counting_bounds(g, 3).violations) for g in gs)
    assert bad == 0


def test_word_deficit_within_seven_ell():
    for g in random_graphs(2000, max_ell=4, seed=3):
        if not has_monochrome_constraint(g):
            continue
        r = verify_counting_bounds(g, 0, search_p=7)
        assert r.first_short_n is not None and r.first_short_n <= 7 * g.ell + 1


def test_report_fields():
    r = verify_counting_bounds(TWO_LOOP, 3)
    d = r.as_dict()
    assert d["ell"] == 2 and d["closed_form_p"] == 7
    assert [row["n"] for row in d["rows"]] == [1, 3, 5, 7]
    assert d["first_n_with_N_below_2n"] == 3


def test_dict_roundtrip():
    assert BranchGraph.from_dict(HUB.as_dict()) == HUB


# -- graphs from maps --------------------------------------------------------------------
def _star_example():
    tree = star_tree(3)
    o = tree.vertex("o")
    v = tree.vertex
    breaks = {
        "a": ((F(0), o), (F(1, 2), v("a")), (F(1), o)),
        "b": ((F(0), o), (F(1), v("b"))),
        "c": ((F(0), o), (F(1), o)),
    }
    fmap = PLTreeMap(tree, breaks)
    H1 = PointSet.from_intervals(tree, [("a", 0, F(1, 2))])
    Hm = PointSet.from_intervals(tree, [("b", F(1, 2), 1), ("c", 0, F(1, 2))])
    return fmap, ShiftSystem(tree, (H1, Hm), F(1, 100))


def test_star_single_active_germ():
    fmap, system = _star_example()
    g = build_branch_graph(fmap, system, "o", F(1, 4))
    ia = fmap.tree.branch_of_edge("o", "a")
    assert set(g.vertices) == {ia}
    assert g.vertices[ia].colors == frozenset({"1"})
    assert g.edges == frozenset({(ia, ia)})
    assert count_color_words(g, 6).N == 1
    assert find_forbidden_word(g, 4) == "m"


def test_star_germ_edge_between_branches():
    tree = star_tree(3)
    o, v = tree.vertex("o"), tree.vertex
    breaks = {
        "a": ((F(0), o), (F(1), v("b"))),
        "b": ((F(0), o), (F(1), v("b"))),
        "c": ((F(0), o), (F(1), v("c"))),
    }
    fmap = PLTreeMap(tree, breaks)
    H1 = PointSet.from_intervals(tree, [("a", 0, 1)])
    Hm = PointSet.from_intervals(tree, [("b", 0, 1)])
    g = build_branch_graph(fmap, ShiftSystem(tree, (H1, Hm), F(1, 100)), "o", F(1, 4))
    ia, ib = (tree.branch_of_edge("o", e) for e in "ab")
    assert g.edges == frozenset({(ia, ib), (ib, ib)})
    assert g.vertices[ib].colors == frozenset({"m"})


def test_build_errors():
    fmap, system = _star_example()
    with pytest.raises(BranchGraphError, match="radius"):
        build_branch_graph(fmap, system, "o", 1)
    with pytest.raises(BranchGraphError, match="branchpoint"):
        build_branch_graph(fmap, system, "a", F(1, 4))


# -- stumps ----------------------------------------------------------------------------
def test_stump_enumeration_matches_growth():
    for d in range(4):
        assert set(stumps(d)) == brute_stumps(d)
        assert len(stumps(d)) == stump_count(d)
    assert stump_count(4) == 33673


def test_depth_limit():
    with pytest.raises(ValueError, match="depth 5"):
        stumps(5)


def test_cut_end_counts_match_walk():
    for s in stumps(3):
        for lvl in range(1, 4):
            assert len(cut_ends(s, lvl)) == brute_cut_ends(s, lvl)


def test_depth_four_audit():
    audit = stump_cut_end_audit(4)
    assert audit.stumps == 33673
    assert audit.passes
    assert max(audit.max_cut_ends.values()) <= 8
    for lvl, k in audit.max_cut_ends.items():
        assert k <= 2 ** (lvl - 1)


def test_simple_stumps():
    assert cut_ends(full_binary_stump(3)) == []
    p = path_stump(3)
    assert cut_ends(p) == [(0, 0, 0)]
    assert cut_end_injection(p, (0, 0, 0)) == (1, 0, 0)


def test_cutpoint_at_level_one():
    s = ((((), ()),), ())
    ends = cut_ends(s)
    assert ends == [(0, 0, 0), (0, 0, 1)]
    assert [edge_bits(s, e) for e in ends] == [(0, 0, 0), (0, 0, 1)]
    images = [cut_end_injection(s, e) for e in ends]
    assert images == [(0, 1, 0), (0, 1, 1)]


def test_injection_rejects_non_cut_end():
    with pytest.raises(ValueError, match="not a cut end"):
        cut_end_injection(full_binary_stump(2), (0, 1))
    with pytest.raises(ValueError, match="not an end"):
        cut_end_injection(path_stump(2), (0,))
