import random
from fractions import Fraction as F

import pytest

from treefold.plmap import flat_tent_map, identity_map, sawtooth_map, tent_map, three_star_map
from treefold.sections import (
    SectionConfig,
    SectionError,
    build_section,
    component_metrics,
    is_monotone,
    is_spanning,
    lap_solution,
    prepare_shift,
    regular_values,
    section_component,
    section_metrics,
)
from treefold.tree import interval_tree

G = flat_tent_map()
T = G.tree
H = F(1, 100)


def coord(p):
    """Position on the unit interval."""
    return p.t if p.vertex is None else F(int(p.vertex))
MAPS = [(tent_map(), 2), (G, 2), (sawtooth_map(2), 2), (sawtooth_map(3), 3), (sawtooth_map(4), 4), (sawtooth_map(5), 5)]


def test_regular_values_g():
    r = regular_values(G, 2, H)
    assert len(r.regular) == 99 and not r.irregular
    assert all(y.vertex is None for y in r.regular)


def test_regular_values_identity_empty():
    r = regular_values(identity_map(interval_tree()), 2, H)
    assert r.regular == [] and r.components == ()


def test_tent_top_value_not_regular():
    from treefold.sections import classify_value

    tent = tent_map()
    assert not classify_value(tent, 2, tent.tree.vertex("1")).regular
    assert len(regular_values(tent, 2, H).regular) == 99


def test_g_section_formulas():
    sec = build_section(G, 2, regular_values(G, 2, H))
    for comp in sec.components:
        for y, (a, b) in comp.table:
            assert a == T.point("1", y.t / 3) and b == T.point("1", 1 - y.t / 3)


def test_tent_section_formulas():
    tent = tent_map()
    sec = build_section(tent, 2, regular_values(tent, 2, H))
    for comp in sec.components:
        for y, (a, b) in comp.table:
            assert a.t == y.t / 2 and b.t == 1 - y.t / 2


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_sawtooth_one_preimage_per_lap(m):
    f = sawtooth_map(m)
    sec = build_section(f, m, regular_values(f, m, H))
    for comp in sec.components:
        for y, row in comp.table:
            laps = [int(x.t * m) for x in row]
            assert laps == list(range(m))


def test_too_few_preimages():
    with pytest.raises(SectionError, match="preimages"):
        section_component(tent_map(), 3, "1", 0, 1, [F(1, 2)])


def test_mesh_full_component_of_g():
    comp = section_component(G, 2, "1", 0, 1, [F(k, 100) for k in range(1, 100)])
    met = component_metrics(G, comp)
    assert met.mesh == 1 - F(2, 3) * F(99, 100)
    assert met.variation == F(98, 300)
    assert not met.variation_ok


def test_mesh_half_component_of_g():
    comp = section_component(G, 2, "1", 0, F(1, 2), [0, F(1, 2)])
    met = component_metrics(G, comp)
    assert met.mesh == F(2, 3) and met.variation == F(1, 6) and met.variation_ok


def test_single_sample_has_zero_variation():
    comp = section_component(G, 2, "1", 0, 1, [F(1, 5)])
    assert component_metrics(G, comp).variation == 0


@pytest.mark.parametrize("f,m", MAPS + [(three_star_map(), 3)])
def test_section_invariants(f, m):
    sec = build_section(f, m, regular_values(f, m, H))
    assert is_monotone(f, sec)
    assert is_spanning(f, sec)
    for met in section_metrics(f, sec):
        assert met.mesh_positive and met.variation_ok
    for comp in sec.components:
        for y, row in comp.table:
            assert all(f(x) == y for x in row)


def test_renumbering_keeps_metrics():
    f = sawtooth_map(4)
    sec = build_section(f, 4, regular_values(f, 4, H))
    rng = random.Random(3)
    for comp in sec.components:
        perm = list(range(4))
        rng.shuffle(perm)
        shuffled = type(comp)(comp.edge, comp.lo, comp.hi, tuple(comp.laps[i] for i in perm),
                              tuple((y, tuple(r[i] for i in perm)) for y, r in comp.table))
        a, b = component_metrics(f, comp), component_metrics(f, shuffled)
        assert (a.mesh, a.variation) == (b.mesh, b.variation)


@pytest.mark.parametrize("f,m", MAPS)
def test_spanning_at_random_values(f, m):
    sec = build_section(f, m, regular_values(f, m, H))
    rng = random.Random(11)
    tree = f.tree
    for _ in range(500 // len(MAPS) + 1):
        comp = rng.choice(sec.components)
        t = comp.lo + (comp.hi - comp.lo) * F(rng.randint(1, 999), 1000)
        row = [lap_solution(f, p, comp.edge, t) for p in comp.laps]
        lo, hi = f.extreme_preimages(tree.point(comp.edge, t))
        assert row[0] == lo and row[-1] == hi


def eventual_index_violations(f, sec, rng, trials=100):
    """Sequences psi_{j_i}(y_i) approaching psi_j(y*) must eventually use index j."""
    tree = f.tree
    bad = 0
    for _ in range(trials):
        comp = rng.choice(sec.components)
        met = component_metrics(f, comp)
        rows = comp.table
        star_y, star = rng.choice(rows)
        j = rng.randrange(len(star))
        u = star[j]
        near = sorted(rows, key=lambda r: tree.distance(r[0], star_y))
        for y, row in near[: max(3, len(near) // 2)]:
            k = rng.randrange(len(row))
            if tree.distance(row[k], u) < met.mesh / 4 and k != j:
                bad += 1
    return bad


def test_eventually_constant_index():
    rng = random.Random(5)
    for f, m in MAPS:
        sec = build_section(f, m, regular_values(f, m, H))
        assert eventual_index_violations(f, sec, rng) == 0


@pytest.mark.parametrize("f,m", MAPS + [(three_star_map(), 3)])
def test_shift_condition_audit(f, m):
    sh = prepare_shift(f, SectionConfig(m, H))
    assert sh.system.audit["passes"], sh.system.audit["failures"][:3]


def test_g_shift_sets_are_separated():
    sh = prepare_shift(G, SectionConfig(2, H))
    h1, h2 = sh.system.sets
    assert all(coord(p) <= F(1, 3) for p in h1.points)
    assert all(coord(p) >= F(2, 3) for p in h2.points)
    assert sh.h_sharp.is_empty


def test_tent_shift_sets_meet_at_turning_point():
    tent = tent_map()
    sh = prepare_shift(tent, SectionConfig(2, H))
    h1, h2 = sh.system.sets
    assert all(coord(p) <= F(1, 2) for p in h1.points) and all(coord(p) >= F(1, 2) for p in h2.points)
    half = tent.tree.point("1", F(1, 2))
    assert h1.contains(half) and h2.contains(half)
    assert all(abs(p.t - F(1, 2)) <= H for p in sh.h_sharp.points)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_sawtooth_sets_meet_only_at_lap_ends(m):
    f = sawtooth_map(m)
    sh = prepare_shift(f, SectionConfig(m, H))
    sets = sh.system.sets
    for j, h in enumerate(sets):
        assert all(F(j, m) <= coord(p) <= F(j + 1, m) for p in h.points)
    for j in range(m - 1):
        shared = set(sets[j].points) & set(sets[j + 1].points)
        assert shared == {f.tree.point("1", F(j + 1, m))}
