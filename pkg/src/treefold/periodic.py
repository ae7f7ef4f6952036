"""Periodic points off the branchpoints, their hull orbits and separating sets.

The pipeline is exact wherever the objects are finite unions of edge
intervals.  Periodic points are found by composing single-edge linear
parts of the map; edge itineraries group them into classes whose convex
hulls cycle under ``f``; the complement of a hull orbit splits into
central and peripheral components, and these decide the invariant set
``W`` that separates the hull orbits from the rest of the tree.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from gmpy2 import mpq

from .plmap import PLTreeMap
from .pointsets import Interval, PointSet
from .tree import Point, Tree, as_fraction

MAX_PERIOD = 12
MAX_SUBTREE_EDGES = 12


class CoreError(ValueError):
    pass


class AssumptionError(CoreError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


_ZERO = mpq(0)


# -- single-edge linear parts ---------------------------------------------------------
@dataclass(frozen=True)
class LinearPart:
    """``f(t) = alpha + beta * t`` on ``[a, b]`` of ``edge``, landing in ``target`` (or constant ``value``)."""

    edge: str
    a: Fraction
    b: Fraction
    target: str | None
    alpha: Fraction
    beta: Fraction
    value: Point | None = None


def linear_parts(fmap: PLTreeMap) -> dict[str, list[LinearPart]]:
    tree = fmap.tree
    out: dict[str, list[LinearPart]] = {}
    for e in tree.edges:
        rows = []
        for p in fmap.pieces[e]:
            if p.constant:
                rows.append(LinearPart(e, p.t0, p.t1, None, Fraction(0), Fraction(0), p.img0))
                continue
            total = p.arc.length
            acc = Fraction(0)
            for seg, ln in zip(p.arc.segments, p.arc.lengths):
                ta = p.t0 + (p.t1 - p.t0) * acc / total
                acc += ln
                tb = p.t0 + (p.t1 - p.t0) * acc / total
                beta = (seg.end - seg.start) / (tb - ta)
                rows.append(LinearPart(e, ta, tb, seg.edge, seg.start - beta * ta, beta))
        out[e] = rows
    return out


@dataclass(frozen=True)
class Lap:
    """``f^k`` on ``[a, b]`` of ``edge``: affine into ``target`` or constant ``value``."""

    edge: str
    a: Fraction
    b: Fraction
    target: str | None
    alpha: Fraction
    beta: Fraction
    value: Point | None = None


# Lap composition is the hot loop of the periodic-point search, so it runs on
# gmpy2 rationals held in plain tuples: (edge, a, b, target, alpha, beta, value).
def _fast_parts(parts) -> dict[str, list[tuple]]:
    return {
        e: [(p.edge, mpq(p.a), mpq(p.b), p.target, mpq(p.alpha), mpq(p.beta), p.value) for p in rows]
        for e, rows in parts.items()
    }


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _compose_fast(fmap, fparts, lap: tuple) -> list[tuple]:
    edge, a, b, target, alpha, beta, value = lap
    if target is None:
        return [(edge, a, b, None, _ZERO, _ZERO, fmap.eval(value))]
    u0, u1 = alpha + beta * a, alpha + beta * b
    c, d = (u0, u1) if u0 <= u1 else (u1, u0)
    out = []
    for _, pa, pb, ptarget, palpha, pbeta, pvalue in fparts[target]:
        lo = c if c > pa else pa
        hi = d if d < pb else pb
        if lo >= hi:
            continue
        ta, tb = (lo - alpha) / beta, (hi - alpha) / beta
        if ta > tb:
            ta, tb = tb, ta
        if ptarget is None:
            out.append((edge, ta, tb, None, _ZERO, _ZERO, pvalue))
        else:
            out.append((edge, ta, tb, ptarget, palpha + pbeta * alpha, pbeta * beta, None))
    if beta < 0:
        out.reverse()
    return out


def _fast_laps(fparts) -> list[tuple]:
    return [lap for rows in fparts.values() for lap in rows]


def iterate_laps(fmap: PLTreeMap, k: int) -> list[Lap]:
    """Laps of ``f^k``: every one maps affinely into a single edge or is constant."""
    fparts = _fast_parts(linear_parts(fmap))
    laps = _fast_laps(fparts)
    for _ in range(k - 1):
        laps = [n for lap in laps for n in _compose_fast(fmap, fparts, lap)]
    return [
        Lap(e, _to_fraction(a), _to_fraction(b), t, _to_fraction(al), _to_fraction(be), v)
        for e, a, b, t, al, be, v in laps
    ]


# -- periodic points ------------------------------------------------------------------
@dataclass(frozen=True)
class PeriodicOrbit:
    points: tuple[Point, ...]
    period: int
    edge_itinerary: tuple[str, ...]
    branchpoint: bool
    in_core: bool | None = None

    def as_dict(self) -> dict:
        return {
            "points": [str(p) for p in self.points],
            "period": self.period,
            "edge_itinerary": list(self.edge_itinerary),
            "branchpoint": self.branchpoint,
            "in_core": self.in_core,
        }


@dataclass(frozen=True)
class PeriodicInterval:
    """An interval fixed pointwise by ``f^k``; its points are not enumerated."""

    period: int
    edge: str
    lo: Fraction
    hi: Fraction

    def as_dict(self) -> dict:
        return {"period": self.period, "edge": self.edge, "lo": str(self.lo), "hi": str(self.hi)}


@dataclass(frozen=True)
class PeriodicReport:
    max_period: int
    depth: int | None
    orbits: tuple[PeriodicOrbit, ...]
    intervals: tuple[PeriodicInterval, ...]

    def points(self) -> set[Point]:
        return {p for o in self.orbits for p in o.points}

    def as_dict(self) -> dict:
        return {
            "max_period": self.max_period,
            "core_depth": self.depth,
            "orbits": [o.as_dict() for o in self.orbits],
            "intervals_of_periodic_points": [i.as_dict() for i in self.intervals],
        }


def fixed_points_of_laps(tree: Tree, laps: Iterable) -> tuple[set[Point], list[tuple[str, Fraction, Fraction]]]:
    """Fixed points of the laps of ``f^k`` plus the spans they fix pointwise (``Lap`` objects or fast tuples)."""
    pts: set[Point] = set()
    spans = []
    for lap in laps:
        if isinstance(lap, Lap):
            edge, a, b, target, alpha, beta, value = (lap.edge, lap.a, lap.b, lap.target, lap.alpha, lap.beta, lap.value)
        else:
            edge, a, b, target, alpha, beta, value = lap
        if target is None:
            for e, t in tree.locations(value):
                if e == edge and a <= t <= b:
                    pts.add(value)
            continue
        if target != edge:
            continue
        if beta == 1:
            if alpha == 0:
                spans.append((edge, _frac(a), _frac(b)))
            continue
        t = alpha / (1 - beta)
        if a <= t <= b:
            pts.add(tree.point(edge, _frac(t)))
    return pts, spans


def _frac(q) -> Fraction:
    return q if isinstance(q, Fraction) else _to_fraction(q)


def _in_span(tree: Tree, x: Point, iv: PeriodicInterval) -> bool:
    return any(e == iv.edge and iv.lo <= t <= iv.hi for e, t in tree.locations(x))


def least_period(fmap: PLTreeMap, x: Point, bound: int) -> int | None:
    y = x
    for k in range(1, bound + 1):
        y = fmap.eval(y)
        if y == x:
            return k
    return None


class _Stepper:
    """``f`` on keys: a vertex id, or ``(edge, t)`` with ``0 < t < 1`` and ``t`` an ``mpq``."""

    def __init__(self, fmap: PLTreeMap, fparts):
        self.fmap, self.tree = fmap, fmap.tree
        self.fparts = fparts
        self.starts = {e: [p[1] for p in rows] for e, rows in fparts.items()}

    def key(self, x: Point):
        return x.vertex if x.vertex is not None else (x.edge, mpq(x.t))

    def point(self, key) -> Point:
        if isinstance(key, str):
            return self.tree.vertex(key)
        return self.tree.point(key[0], _to_fraction(key[1]))

    def __call__(self, key):
        if isinstance(key, str):
            return self.key(self.fmap.eval(self.tree.vertex(key)))
        e, t = key
        part = self.fparts[e][max(bisect_right(self.starts[e], t) - 1, 0)]
        if part[3] is None:
            return self.key(part[6])
        u = part[4] + part[5] * t
        if 0 < u < 1:
            return (part[3], u)
        return self.key(self.tree.point(part[3], _to_fraction(u)))


def _fixed_keys(step: _Stepper, laps) -> tuple[set, list[tuple[str, Fraction, Fraction]]]:
    keys: set = set()
    spans = []
    tree = step.tree
    for edge, a, b, target, alpha, beta, value in laps:
        if target is None:
            for e, t in tree.locations(value):
                if e == edge and a <= t <= b:
                    keys.add(step.key(value))
            continue
        if target != edge:
            continue
        if beta == 1:
            if alpha == 0:
                spans.append((edge, _to_fraction(a), _to_fraction(b)))
            continue
        t = alpha / (1 - beta)
        if a <= t <= b:
            keys.add((edge, t) if 0 < t < 1 else step.key(tree.point(edge, _to_fraction(t))))
    return keys, spans


def _orbit(fmap, tree, x: Point, n: int, system=None, depth=None) -> PeriodicOrbit:
    pts = fmap.orbit(x, n)
    if fmap.eval(pts[-1]) != x:
        raise CoreError(f"{x} is not fixed by the {n}-th iterate")
    return _make_orbit(fmap, tree, pts, system, depth)


def _make_orbit(fmap, tree, pts: list[Point], system, depth) -> PeriodicOrbit:
    n = len(pts)
    start = min(range(n), key=lambda i: tree.order_key(pts[i]))
    pts = pts[start:] + pts[:start]
    branch = any(p.vertex is not None and p.vertex in tree.branchpoints for p in pts)
    core = None if system is None else _in_core(system, fmap, pts[0], depth or 0)
    return PeriodicOrbit(tuple(pts), n, tuple(tree.edge_of(p) for p in pts), branch, core)


def _in_core(system, fmap, x: Point, depth: int) -> bool:
    """Same answer as the depth-``depth`` core test of ``classify_point``, stopping at the first miss."""
    y = x
    for i in range(depth + 1):
        if i:
            y = fmap.eval(y)
        if not all(h.contains(y, system.eps) for h in system.sets):
            return False
    return True


def periodic_points(fmap: PLTreeMap, max_period: int, system=None, depth: int | None = None) -> PeriodicReport:
    """Every periodic orbit of least period ``<= max_period``, found exactly.

    Orbits are tagged branchpoint / non-branchpoint and, when a shift
    system is given, with core membership at the given depth.
    """
    if not 1 <= max_period <= MAX_PERIOD:
        raise CoreError(f"max_period must lie in 1..{MAX_PERIOD}")
    tree = fmap.tree
    fparts = _fast_parts(linear_parts(fmap))
    laps = _fast_laps(fparts)
    step = _Stepper(fmap, fparts)
    seen: set = set()
    orbits: list[PeriodicOrbit] = []
    intervals: list[PeriodicInterval] = []
    for k in range(1, max_period + 1):
        if k > 1:
            laps = [n for lap in laps for n in _compose_fast(fmap, fparts, lap)]
        keys, spans = _fixed_keys(step, laps)
        for e, a, b in spans:
            intervals.append(PeriodicInterval(k, e, a, b))
        for v in tree.vertices:
            if fmap.iterate(tree.vertex(v), k) == tree.vertex(v):
                keys.add(v)
        for key in keys:
            if key in seen:
                continue
            x = step.point(key)
            if any(_in_span(tree, x, iv) for iv in intervals):
                continue
            # a point of smaller least period was recorded, whole orbit, at its own step
            ks = [key]
            for _ in range(k - 1):
                ks.append(step(ks[-1]))
            if step(ks[-1]) != key:
                raise CoreError(f"{x} is not fixed by the {k}-th iterate")
            seen.update(ks)
            orbits.append(_make_orbit(fmap, tree, [x] + [step.point(q) for q in ks[1:]], system, depth))
    orbits.sort(key=lambda o: (o.period, tree.order_key(o.points[0])))
    return PeriodicReport(max_period, depth, tuple(orbits), tuple(intervals))


# -- edge itineraries and hull orbits ---------------------------------------------------
def primitive_root(word: Sequence) -> tuple:
    word = tuple(word)
    n = len(word)
    for r in range(1, n + 1):
        if n % r == 0 and word == word[:r] * (n // r):
            return word[:r]
    return word


def repetition_count(word: Sequence) -> int:
    return len(word) // len(primitive_root(word))


def _rotate(word: tuple, k: int) -> tuple:
    k %= len(word)
    return word[k:] + word[:k]


def _coord(tree: Tree, x: Point, edge: str) -> Fraction:
    for e, t in tree.locations(x):
        if e == edge:
            return t
    raise CoreError(f"{x} does not lie on edge {edge!r}")


@dataclass(frozen=True)
class HullOrbit:
    """``N`` closed edge intervals ``Z_0 .. Z_{N-1}`` cycled by ``f``, with the class points in each."""

    representative: Point
    edges: tuple[str, ...]
    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]
    members: tuple[tuple[Point, ...], ...]
    periods: tuple[int, ...]

    @property
    def N(self) -> int:
        return len(self.edges)

    def interval(self, j: int) -> Interval:
        j %= self.N
        return Interval(self.edges[j], self.lo[j], self.hi[j])

    def endpoint(self, tree: Tree, j: int, end: str) -> Point:
        j %= self.N
        return tree.point(self.edges[j], self.lo[j] if end == "lo" else self.hi[j])

    def as_pointset(self, tree: Tree) -> PointSet:
        return PointSet(tree, (), tuple(self.interval(j) for j in range(self.N)))

    def as_dict(self) -> dict:
        return {
            "representative": str(self.representative),
            "N": self.N,
            "intervals": [[self.edges[j], str(self.lo[j]), str(self.hi[j])] for j in range(self.N)],
            "periods": list(self.periods),
            "members": [[str(p) for p in m] for m in self.members],
        }


@dataclass(frozen=True)
class ClassReport:
    hull_orbits: tuple[HullOrbit, ...]
    violations: tuple[dict, ...]

    def as_dict(self) -> dict:
        return {"hull_orbits": [h.as_dict() for h in self.hull_orbits], "violations": list(self.violations)}


def edge_equivalence_classes(orbits: Iterable[PeriodicOrbit], tree: Tree, fmap: PLTreeMap | None = None) -> ClassReport:
    """Group points by the primitive root of their edge itinerary and build hull orbits.

    Checks that no itinerary repeats three or more times, that shorter
    period points sit between a doubled point and its ``N``-th image,
    that hulls avoid branchpoints and are pairwise disjoint, and (given
    the map) that each hull maps onto the next.
    """
    orbits = [o for o in orbits if not o.branchpoint]
    violations: list[dict] = []
    itin: dict[Point, tuple[str, ...]] = {}
    period: dict[Point, int] = {}
    for o in orbits:
        t = repetition_count(o.edge_itinerary)
        if t >= 3:
            violations.append(
                {"rule": "itinerary repeated three or more times", "orbit": [str(p) for p in o.points], "t": t}
            )
        for k, p in enumerate(o.points):
            itin[p] = _rotate(o.edge_itinerary, k)
            period[p] = o.period
    by_root: dict[tuple, list[Point]] = {}
    for p, w in itin.items():
        by_root.setdefault(primitive_root(w), []).append(p)
    families: dict[tuple, list[tuple]] = {}
    for r in by_root:
        canon = min(_rotate(r, k) for k in range(len(r)))
        families.setdefault(canon, []).append(r)
    hulls = []
    for canon, roots in families.items():
        pts = [p for r in roots for p in by_root[r]]
        rep = min(pts, key=tree.order_key)
        r0 = primitive_root(itin[rep])
        N = len(r0)
        edges, lo, hi, members = [], [], [], []
        for j in range(N):
            rj = _rotate(r0, j)
            slot = sorted(by_root.get(rj, []), key=tree.order_key)
            e = rj[0]
            ts = [_coord(tree, p, e) for p in slot]
            edges.append(e)
            if ts:
                lo.append(min(ts))
                hi.append(max(ts))
            else:
                lo.append(None)
                hi.append(None)
            members.append(tuple(slot))
        if any(v is None for v in lo):
            violations.append({"rule": "hull slot without class points", "representative": str(rep)})
            continue
        periods = tuple(sorted({period[p] for p in pts}))
        hulls.append(HullOrbit(rep, tuple(edges), tuple(lo), tuple(hi), tuple(members), periods))
    hulls.sort(key=lambda h: tree.order_key(h.representative))
    for h in hulls:
        violations.extend(_doubling_violations(tree, fmap, h, period))
        violations.extend(_branchpoint_violations(tree, h))
        if fmap is not None:
            violations.extend(hull_image_violations(fmap, h))
    violations.extend(_disjointness_violations(tree, hulls))
    return ClassReport(tuple(hulls), tuple(violations))


def _doubling_violations(tree, fmap, h: HullOrbit, period) -> list[dict]:
    out = []
    if fmap is None:
        return out
    for slot in h.members:
        short = [p for p in slot if period[p] == h.N]
        long = [q for q in slot if period[q] == 2 * h.N]
        for q in long:
            qN = fmap.iterate(q, h.N)
            arc = tree.hull(q, qN)
            for p in short:
                if not tree.arc_contains(arc, p) or p in (q, qN):
                    out.append({"rule": "shorter period point not between doubled pair", "p": str(p), "q": str(q)})
    return out


def _branchpoint_violations(tree, h: HullOrbit) -> list[dict]:
    out = []
    for j in range(h.N):
        for end in ("lo", "hi"):
            x = h.endpoint(tree, j, end)
            if x.vertex is not None and x.vertex in tree.branchpoints:
                out.append({"rule": "hull touches a branchpoint", "interval": j, "vertex": x.vertex})
    return out


def _disjointness_violations(tree, hulls: Sequence[HullOrbit]) -> list[dict]:
    items = [(k, j, h.interval(j)) for k, h in enumerate(hulls) for j in range(h.N)]
    out = []
    for (k1, j1, a), (k2, j2, b) in combinations(items, 2):
        meet = False
        if a.edge == b.edge:
            meet = a.lo <= b.hi and b.lo <= a.hi
        else:
            ends_a = {tree.point(a.edge, a.lo), tree.point(a.edge, a.hi)}
            ends_b = {tree.point(b.edge, b.lo), tree.point(b.edge, b.hi)}
            meet = bool(ends_a & ends_b)
        if meet:
            out.append({"rule": "hull intervals intersect", "first": [k1, j1], "second": [k2, j2]})
    return out


def interval_image(fmap: PLTreeMap, iv: Interval) -> list[Point]:
    """Images of the ends and of every breakpoint inside ``iv``; their hull is ``f(iv)``."""
    tree = fmap.tree
    ts = {iv.lo, iv.hi}
    for t in fmap._ts[iv.edge]:
        if iv.lo < t < iv.hi:
            ts.add(t)
    return [fmap.eval(tree.point(iv.edge, t)) for t in sorted(ts)]


def hull_image_violations(fmap: PLTreeMap, h: HullOrbit) -> list[dict]:
    tree = fmap.tree
    out = []
    for j in range(h.N):
        nxt = h.interval(j + 1)
        target = PointSet(tree, (), (nxt,))
        imgs = interval_image(fmap, h.interval(j))
        ends = {h.endpoint(tree, j + 1, "lo"), h.endpoint(tree, j + 1, "hi")}
        fe = {fmap.eval(h.endpoint(tree, j, "lo")), fmap.eval(h.endpoint(tree, j, "hi"))}
        if not all(target.contains(y) for y in imgs) or fe != ends:
            out.append({"rule": "hull image differs from next hull", "interval": j})
    return out


def betweenness_violations(fmap: PLTreeMap, points: Iterable[Point], cap: int = 60) -> list[dict]:
    """Middle of three same-edge points must map between the images of the outer two when those share an edge."""
    tree = fmap.tree
    by_edge: dict[str, list[Point]] = {}
    for p in points:
        by_edge.setdefault(tree.edge_of(p), []).append(p)
    out = []
    for e, pts in by_edge.items():
        pts = sorted(pts, key=lambda p: _coord(tree, p, e))[:cap]
        imgs = [fmap.eval(p) for p in pts]
        edges = [{ee for ee, _ in tree.locations(y)} for y in imgs]
        for i, j, k in combinations(range(len(pts)), 3):
            if not edges[i] & edges[k]:
                continue
            if not tree.arc_contains(tree.hull(imgs[i], imgs[k]), imgs[j]):
                out.append({"rule": "betweenness not preserved", "points": [str(pts[i]), str(pts[j]), str(pts[k])]})
    return out


# -- complement of a hull orbit ---------------------------------------------------------
@dataclass(frozen=True)
class ComplementComponent:
    kind: str  # "central" or "peripheral"
    touches: frozenset[tuple[int, str]]
    pieces: tuple[tuple[str, Fraction, Fraction], ...]
    vertices: tuple[str, ...]

    @property
    def attached(self) -> tuple[int, ...]:
        return tuple(sorted({j for j, _ in self.touches}))

    def closure(self, tree: Tree) -> PointSet:
        return PointSet(tree, tuple(tree.vertex(v) for v in self.vertices), tuple(Interval(e, a, b) for e, a, b in self.pieces))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "touches": sorted([j, end] for j, end in self.touches),
            "pieces": [[e, str(a), str(b)] for e, a, b in self.pieces],
            "vertices": list(self.vertices),
        }


@dataclass(frozen=True)
class Decomposition:
    hull: HullOrbit
    components: tuple[ComplementComponent, ...]
    minus_end: tuple[str, ...]  # which end ("lo"/"hi") of Z_j is z^-_j

    @property
    def central(self) -> list[ComplementComponent]:
        return [c for c in self.components if c.kind == "central"]

    @property
    def peripheral(self) -> list[ComplementComponent]:
        return [c for c in self.components if c.kind == "peripheral"]

    def side(self, j: int, sign: str) -> str:
        m = self.minus_end[j % self.hull.N]
        return m if sign == "-" else ("hi" if m == "lo" else "lo")

    def component_at(self, j: int, end: str) -> ComplementComponent | None:
        for c in self.components:
            if (j % self.hull.N, end) in c.touches:
                return c
        return None

    def as_dict(self) -> dict:
        return {
            "N": self.hull.N,
            "components": [c.as_dict() for c in self.components],
            "z_minus": list(self.minus_end),
        }


def _vertex_z(tree: Tree, hull: HullOrbit) -> dict[str, tuple[int, str]]:
    """Vertices lying in a hull interval, with the interval index and which of its ends it is."""
    out = {}
    for j in range(hull.N):
        e = hull.edges[j]
        if hull.lo[j] == 0:
            out[tree.parent[e]] = (j, "lo")
        if hull.hi[j] == 1:
            out[e] = (j, "hi")
    return out


def decompose_complement(tree: Tree, hull: HullOrbit, fmap: PLTreeMap | None = None) -> Decomposition:
    """Components of the tree minus the hull orbit, each central or peripheral.

    With one interval, the side whose interior has points mapping into the
    hull is labelled ``+`` when the map is supplied.
    """
    vz = _vertex_z(tree, hull)
    pieces = []  # (edge, a, b, left_touch, right_touch, left_vertex, right_vertex)
    for e in tree.edges:
        blocked = []
        for j in range(hull.N):
            if hull.edges[j] == e:
                blocked.append((hull.lo[j], hull.hi[j], j))
        u, v = tree.parent[e], e
        if u in vz and not any(lo == 0 for lo, _, _ in blocked):
            j, end = vz[u]
            blocked.append((Fraction(0), Fraction(0), (j, end)))
        if v in vz and not any(hi == 1 for _, hi, _ in blocked):
            j, end = vz[v]
            blocked.append((Fraction(1), Fraction(1), (j, end)))
        blocked.sort(key=lambda b: b[0])
        cur = Fraction(0)
        left = ("vertex", u)
        for lo, hi, tag in blocked:
            if lo > cur:
                right = ("touch", (tag, "lo")) if isinstance(tag, int) else ("touch", tag)
                pieces.append((e, cur, lo, left, right))
            cur = hi
            left = ("touch", (tag, "hi")) if isinstance(tag, int) else ("touch", tag)
        if cur < 1:
            pieces.append((e, cur, Fraction(1), left, ("vertex", v)))
    parent = list(range(len(pieces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    at_vertex: dict[str, list[int]] = {}
    for k, (_, _, _, l, r) in enumerate(pieces):
        for end in (l, r):
            if end[0] == "vertex" and end[1] not in vz:
                at_vertex.setdefault(end[1], []).append(k)
    for ks in at_vertex.values():
        for k in ks[1:]:
            parent[find(k)] = find(ks[0])
    groups: dict[int, list[int]] = {}
    for k in range(len(pieces)):
        groups.setdefault(find(k), []).append(k)
    comps = []
    for ks in groups.values():
        touches = set()
        verts = set()
        for k in ks:
            for end in pieces[k][3:5]:
                if end[0] == "touch":
                    touches.add(end[1])
                elif end[1] not in vz:
                    verts.add(end[1])
        kind = "central" if len({j for j, _ in touches}) >= 2 else "peripheral"
        comps.append(
            ComplementComponent(
                kind,
                frozenset(touches),
                tuple((pieces[k][0], pieces[k][1], pieces[k][2]) for k in sorted(ks, key=lambda k: (pieces[k][0], pieces[k][1]))),
                tuple(sorted(verts)),
            )
        )
    comps.sort(key=lambda c: (c.kind, sorted(c.touches)))
    minus = []
    for j in range(hull.N):
        ends = {end: c for c in comps for (jj, end) in c.touches if jj == j}
        if hull.N >= 2:
            cen = [end for end in ("lo", "hi") if end in ends and ends[end].kind == "central"]
            minus.append(cen[0] if cen else "lo")
        else:
            minus.append("hi" if _plus_is_lo(tree, hull, ends, fmap) else "lo")
    return Decomposition(hull, tuple(comps), tuple(minus))


def _plus_is_lo(tree, hull, ends, fmap) -> bool:
    if fmap is None:
        return False
    Z = hull.as_pointset(tree)
    lo_hit = "lo" in ends and interior_maps_into(fmap, ends["lo"], Z)
    hi_hit = "hi" in ends and interior_maps_into(fmap, ends["hi"], Z)
    return lo_hit and not hi_hit


def _open_meets(target: PointSet, edge: str, c: Fraction, d: Fraction) -> bool:
    for lo, hi in target._spans.get(edge, []):
        if lo < d and c < hi:
            return True
    return any(c < t < d for t in target._by_edge.get(edge, []))


def interior_maps_into(fmap: PLTreeMap, comp: ComplementComponent, target: PointSet) -> bool:
    """Exact test: does some interior point of the component map into ``target``?"""
    tree = fmap.tree
    parts = linear_parts(fmap)
    for v in comp.vertices:
        if target.contains(fmap.eval(tree.vertex(v))):
            return True
    for e, a, b in comp.pieces:
        for part in parts[e]:
            lo, hi = max(a, part.a), min(b, part.b)
            if lo >= hi:
                continue
            if part.target is None:
                if target.contains(part.value):
                    return True
                continue
            u0, u1 = part.alpha + part.beta * lo, part.alpha + part.beta * hi
            if _open_meets(target, part.target, min(u0, u1), max(u0, u1)):
                return True
            for t in (part.a, part.b):
                if a < t < b and target.contains(fmap.eval(tree.point(e, t))):
                    return True
    return False


# -- germ dynamics near the hull orbit ------------------------------------------------------
@dataclass(frozen=True)
class Side:
    """A one-sided germ at edge coordinate ``t`` of ``edge``, heading in direction ``dir``."""

    edge: str
    t: Fraction
    dir: int


def _normalize_side(tree: Tree, edge: str, t: Fraction, d: int) -> Side | None:
    """Move a side that leaves its edge through a vertex onto the next edge (None at an end of the tree)."""
    if (t == 0 and d < 0) or (t == 1 and d > 0):
        v = tree.parent[edge] if t == 0 else edge
        others = [(e, tt) for e, tt in tree.incident_edges(v) if e != edge]
        if not others:
            return None
        if len(others) > 1:
            raise CoreError(f"side through branchpoint {v!r}")
        e, tt = others[0]
        return Side(e, tt, 1 if tt == 0 else -1)
    return Side(edge, t, d)


@dataclass(frozen=True)
class PhiDynamics:
    phi: dict
    cycles: tuple[tuple[str, ...], ...]
    shape: str
    eps: Fraction
    max_eps: Fraction
    neighborhoods: dict
    violations: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "phi": dict(self.phi),
            "nontrivial_cycles": [list(c) for c in self.cycles],
            "shape": self.shape,
            "eps": str(self.eps),
            "max_eps": str(self.max_eps),
            "violations": list(self.violations),
        }


def _outward(tree: Tree, hull: HullOrbit, j: int, end: str) -> Side | None:
    e = hull.edges[j]
    t = hull.lo[j] if end == "lo" else hull.hi[j]
    return _normalize_side(tree, e, t, -1 if end == "lo" else 1)


def _obstacle_gap(fmap, hull, side: Side) -> tuple[Fraction, Fraction]:
    """Room along ``side`` before a vertex or a vertex image, and before another hull interval."""
    tree = fmap.tree
    e, t, d = side.edge, side.t, side.dir
    ln = tree.length[e]
    full = (1 - t) if d > 0 else t
    marks = set()
    for v in tree.vertices:
        for x in (tree.vertex(v), fmap.eval(tree.vertex(v))):
            for ee, tt in tree.locations(x):
                if ee == e:
                    marks.add(tt)
    for tt in marks:
        gap = (tt - t) * d
        if gap > 0:
            full = min(full, gap)
    half = full
    for j in range(hull.N):
        if hull.edges[j] != e:
            continue
        for tt in (hull.lo[j], hull.hi[j]):
            gap = (tt - t) * d
            if gap > 0:
                half = min(half, gap / 2)
    return full * ln, half * ln


def phi_dynamics(fmap: PLTreeMap, decomposition: Decomposition, eps=None) -> PhiDynamics:
    """The self-map on ``{U-_j, U+_j, Z_j}`` read off the linear germs at the hull ends."""
    tree = fmap.tree
    hull = decomposition.hull
    N = hull.N
    parts = linear_parts(fmap)
    sides: dict[str, Side | None] = {}
    for j in range(N):
        for sign in "-+":
            sides[f"U{sign}{j}"] = _outward(tree, hull, j, decomposition.side(j, sign))
    limits = [min(_obstacle_gap(fmap, hull, s)) for s in sides.values() if s is not None]
    max_eps = min(limits) if limits else Fraction(1)
    eps = max_eps / 2 if eps is None else as_fraction(eps)
    if eps <= 0 or eps > max_eps:
        raise CoreError(f"eps {eps} too large for disjoint neighborhoods; largest admissible is {max_eps}")

    def node_of_side(j: int, side: Side | None) -> str:
        for sign in "-+":
            if sides[f"U{sign}{j}"] == side and side is not None:
                return f"U{sign}{j}"
        return f"Z{j}"

    phi: dict[str, str] = {}
    violations: list[str] = []
    for j in range(N):
        phi[f"Z{j}"] = f"Z{(j + 1) % N}"
        nxt = (j + 1) % N
        for sign in "-+":
            name = f"U{sign}{j}"
            s = sides[name]
            if s is None:
                phi[name] = phi[f"Z{j}"]
                continue
            part = None
            for p in parts[s.edge]:
                if (s.dir > 0 and p.a <= s.t < p.b) or (s.dir < 0 and p.a < s.t <= p.b):
                    part = p
                    break
            if part.target is None:
                phi[name] = f"Z{nxt}"
                continue
            u = part.alpha + part.beta * s.t
            d = 1 if part.beta * s.dir > 0 else -1
            e2 = part.target
            if hull.edges[nxt] == e2 and (
                (hull.lo[nxt] < u < hull.hi[nxt])
                or (u == hull.lo[nxt] and d > 0 and hull.lo[nxt] < hull.hi[nxt])
                or (u == hull.hi[nxt] and d < 0 and hull.lo[nxt] < hull.hi[nxt])
            ):
                phi[name] = f"Z{nxt}"
                continue
            img = _normalize_side(tree, e2, u, d)
            target = node_of_side(nxt, img)
            if target == f"Z{nxt}":
                violations.append(f"germ image of {name} is not a neighborhood of the next hull")
            phi[name] = target
    cycles = _cycles(phi)
    trivial = tuple(f"Z{j}" for j in range(N))
    nontrivial = tuple(c for c in cycles if set(c) != set(trivial))
    shape = _cycle_shape(nontrivial, N, phi)
    if shape == "invalid":
        violations.append("nontrivial cycles have a shape other than one 2N-cycle or one or two N-cycles")
    hoods = {}
    for name, s in sides.items():
        if s is None:
            j = int(name[2:])
            hoods[name] = PointSet(tree, (), (hull.interval(j),))
            continue
        ln = tree.length[s.edge]
        t2 = s.t + s.dir * eps / ln
        a, b = sorted((s.t, t2))
        hoods[name] = PointSet(tree, (), (Interval(s.edge, a, b),))
    return PhiDynamics(phi, nontrivial, shape, eps, max_eps, hoods, tuple(violations))


def _cycles(phi: dict[str, str]) -> list[tuple[str, ...]]:
    out = []
    done: set[str] = set()
    for start in sorted(phi):
        path = []
        pos = {}
        x = start
        while x not in pos and x not in done:
            pos[x] = len(path)
            path.append(x)
            x = phi[x]
        if x in pos:
            cyc = tuple(path[pos[x]:])
            k = min(range(len(cyc)), key=lambda i: cyc[i])
            out.append(cyc[k:] + cyc[:k])
        done.update(path)
    return out


def _cycle_shape(cycles, N: int, phi) -> str:
    if not cycles:
        return "none"

    def power(x, k):
        for _ in range(k):
            x = phi[x]
        return x

    def flip(x):
        return ("U+" if x.startswith("U-") else "U-") + x[2:]

    if len(cycles) == 1 and len(cycles[0]) == 2 * N:
        if all(x.startswith("U") and power(x, N) == flip(x) for x in cycles[0]):
            return "one cycle of length 2N"
    if len(cycles) in (1, 2) and all(len(c) == N for c in cycles):
        return "one or two cycles of length N"
    return "invalid"


# -- separating sets -----------------------------------------------------------------------
@dataclass(frozen=True)
class ClassW:
    hull: HullOrbit
    case: str  # "central", "peripheral", "one side", "hull only"
    W: PointSet
    notes: tuple[str, ...]
    surrogate_mfold_failure: bool

    def as_dict(self) -> dict:
        return {
            "representative": str(self.hull.representative),
            "case": self.case,
            "W": self.W.describe(),
            "notes": list(self.notes),
            "restriction_fails_mfold_surrogate": self.surrogate_mfold_failure,
        }


@dataclass(frozen=True)
class SeparatingSet:
    W: PointSet
    chosen: tuple[int, ...]
    per_class: tuple[ClassW, ...]
    proper: bool
    anchor: int | None

    def as_dict(self) -> dict:
        return {
            "W": self.W.describe(),
            "chosen_classes": list(self.chosen),
            "anchor": self.anchor,
            "proper": self.proper,
            "classes": [c.as_dict() for c in self.per_class],
        }


def _union(tree, sets: Iterable[PointSet]) -> PointSet:
    out = PointSet.empty(tree)
    for s in sets:
        out = out.union(s)
    return out


def _measure(tree, ps: PointSet) -> Fraction:
    return sum(((iv.hi - iv.lo) * tree.length[iv.edge] for iv in ps.intervals), Fraction(0))


def restriction_fails_mfold(fmap: PLTreeMap, hull: HullOrbit, m: int, grid: int = 50) -> bool:
    """Sampled surrogate: some grid value of ``Z_{j+1}`` has fewer than ``m`` preimages in ``Z_j``."""
    tree = fmap.tree
    for j in range(hull.N):
        src = PointSet(tree, (), (hull.interval(j),))
        nxt = hull.interval(j + 1)
        ts = [nxt.lo] if nxt.lo == nxt.hi else [nxt.lo + (nxt.hi - nxt.lo) * Fraction(k, grid) for k in range(1, grid)]
        for t in ts:
            pre = fmap.preimages(tree.point(nxt.edge, t))
            count = sum(1 for p in pre.points if src.contains(p)) + sum(
                1 for iv in pre.intervals if iv.edge == src.intervals[0].edge
            ) * m
            if count < m:
                return True
    return False


def class_separating_set(fmap: PLTreeMap, dec: Decomposition, m: int = 2) -> ClassW:
    """``W(p)`` by precedence: central union, peripheral union, one side (single interval), hull only."""
    tree = fmap.tree
    hull = dec.hull
    Z = hull.as_pointset(tree)
    notes = []
    surrogate = restriction_fails_mfold(fmap, hull, m)
    if not surrogate:
        notes.append("restriction to the hull orbit looks m-fold on the grid")
    central = dec.central
    per = dec.peripheral
    if hull.N >= 2 and len(central) == 1:
        c_free = not interior_maps_into(fmap, central[0], Z)
        p_free = bool(per) and not any(interior_maps_into(fmap, c, Z) for c in per)
        if c_free and p_free:
            notes.append("both unions qualify; central taken first")
        if c_free:
            return ClassW(hull, "central", Z.union(central[0].closure(tree)), tuple(notes), surrogate)
        if p_free:
            return ClassW(hull, "peripheral", _union(tree, [Z, *(c.closure(tree) for c in per)]), tuple(notes), surrogate)
    if hull.N == 1:
        minus = dec.component_at(0, dec.side(0, "-"))
        plus = dec.component_at(0, dec.side(0, "+"))
        for side, other in ((minus, plus), (plus, minus)):
            if side is None:
                continue
            target = Z if other is None else Z.union(other.closure(tree))
            if not interior_maps_into(fmap, side, target):
                if side is plus:
                    notes.append("the + side qualified; neither side has interior preimages of the hull")
                return ClassW(hull, "one side", Z.union(side.closure(tree)), tuple(notes), surrogate)
    return ClassW(hull, "hull only", Z, tuple(notes), surrogate)


def separating_set(fmap: PLTreeMap, decompositions: Sequence[Decomposition], m: int = 2) -> SeparatingSet:
    """Union of class sets ``W(q)`` over a chosen family, proper and containing every hull orbit."""
    tree = fmap.tree
    per_class = [class_separating_set(fmap, d, m) for d in decompositions]
    n = len(per_class)
    anchor = None
    for kind in ("central", "one side"):
        cands = [k for k in range(n) if per_class[k].case == kind]
        if cands:
            anchor = max(cands, key=lambda k: (_measure(tree, per_class[k].W), -k))
            break
    if anchor is not None:
        W0 = per_class[anchor].W
        chosen = [anchor] + [k for k in range(n) if k != anchor and not decompositions[k].hull.as_pointset(tree).subset_of(W0)]
    else:
        cands = [k for k in range(n) if per_class[k].case == "peripheral"]
        if cands:
            anchor = max(cands, key=lambda k: (_measure(tree, per_class[k].W), -k))
            C0 = _union(tree, [c.closure(tree) for c in decompositions[anchor].central])
            chosen = [anchor] + [
                k for k in range(n) if k != anchor and decompositions[k].hull.as_pointset(tree).subset_of(C0)
            ]
        else:
            chosen = list(range(n))
    W = _union(tree, [per_class[k].W for k in chosen])
    for d in decompositions:
        if not d.hull.as_pointset(tree).subset_of(W):
            raise CoreError("separating set misses a hull orbit")
    proper = not W.covers_tree()
    if not proper:
        raise CoreError("properness violated: the separating set is the whole tree; increase sampling")
    return SeparatingSet(W, tuple(chosen), tuple(per_class), proper, anchor)


def invariance_failures(fmap: PLTreeMap, W: PointSet, samples: int = 1000) -> list[Point]:
    return [x for x in W.sample(samples) if not W.contains(fmap.eval(x))]


# -- standing assumptions ------------------------------------------------------------------
@dataclass(frozen=True)
class AssumptionReport:
    branchpoints: dict
    invariant_subtrees: tuple[tuple[str, ...], ...]
    cutoff: int

    @property
    def holds(self) -> bool:
        return not self.invariant_subtrees and all(v["ok"] for v in self.branchpoints.values())

    def as_dict(self) -> dict:
        return {
            "holds": self.holds,
            "branchpoints": self.branchpoints,
            "invariant_subtrees": [list(s) for s in self.invariant_subtrees],
            "cutoff": self.cutoff,
        }


def _edge_images(fmap: PLTreeMap, e: str) -> tuple[set[str], set[Point]]:
    edges, pts = set(), set()
    for p in fmap.pieces[e]:
        if p.constant:
            pts.add(p.img0)
        for seg in p.arc.segments:
            edges.add(seg.edge)
    return edges, pts


def invariant_subtrees(fmap: PLTreeMap) -> list[tuple[str, ...]]:
    """Proper connected unions of edges mapped into themselves (exhaustive, small trees only)."""
    tree = fmap.tree
    E = list(tree.edges)
    if len(E) > MAX_SUBTREE_EDGES:
        raise CoreError(f"subtree search limited to {MAX_SUBTREE_EDGES} edges")
    img = {e: _edge_images(fmap, e) for e in E}
    out = []
    for r in range(1, len(E)):
        for S in combinations(E, r):
            Sset = set(S)
            verts = {v for e in S for v in tree.edge_ends(e)}
            if len(verts) != len(S) + 1:
                continue  # not connected
            ok = True
            for e in S:
                edges, pts = img[e]
                if not edges <= Sset:
                    ok = False
                    break
                for x in pts:
                    if x.vertex is not None:
                        if x.vertex not in verts:
                            ok = False
                    elif x.edge not in Sset:
                        ok = False
                if not ok:
                    break
            if ok:
                out.append(tuple(S))
    return out


def check_standing_assumptions(fmap: PLTreeMap, cutoff: int = MAX_PERIOD, abort: bool = True) -> AssumptionReport:
    """Preperiodic branchpoints must land on a fixed point in one step; no proper invariant natural subtree."""
    tree = fmap.tree
    bps = {}
    for y in sorted(tree.branchpoints):
        orbit = fmap.orbit(tree.vertex(y), 2 * cutoff + 1)
        first = {}
        pre = None
        for k, x in enumerate(orbit):
            if x in first:
                pre = first[x]
                break
            first[x] = k
        fy = orbit[1]
        ok = pre is None or fmap.eval(fy) == fy
        bps[y] = {"preperiodic_within_cutoff": pre is not None, "image_fixed": fmap.eval(fy) == fy, "ok": ok}
    subs = tuple(invariant_subtrees(fmap))
    rep = AssumptionReport(bps, subs, cutoff)
    if abort and not rep.holds:
        raise AssumptionError(
            "standing assumptions fail; pass to an iterate (branchpoint condition) or restrict to / collapse the "
            "invariant subtree first, which changes neither the m-fold hypothesis nor the entropy bound",
            rep,
        )
    return rep


# -- germ double-cover consequence --------------------------------------------------------------
def double_cover_check(fmap: PLTreeMap, system, zp: Point, z: Point, y: Point, samples: int = 200) -> dict:
    """Sampled check of the two-sided hull property.

    When ``y`` lies on ``[zp, z]`` and the interior of ``f([y, z])`` misses
    ``[f(zp), f(z)]``, the branchpoints and their images, the interior of
    ``[y, z]`` should miss the first or the last shift set.
    """
    tree = fmap.tree
    arc_yz = tree.hull(y, z)
    if not tree.arc_contains(tree.hull(zp, z), y):
        raise CoreError("y must lie between zp and z")
    inner = [tree.point_on_arc(arc_yz, Fraction(k, samples)) for k in range(1, samples)]
    images = [fmap.eval(x) for x in inner]
    target = tree.hull(fmap.eval(zp), fmap.eval(z))
    bad = {tree.vertex(v) for v in tree.branchpoints} | {fmap.eval(tree.vertex(v)) for v in tree.branchpoints}
    img_ends = {fmap.eval(y), fmap.eval(z)}
    hyp = all((fx in img_ends) or (not tree.arc_contains(target, fx) and fx not in bad) for fx in images)
    H1, Hm = system.sets[0], system.sets[-1]
    meets1 = any(H1.contains(x, system.eps) for x in inner)
    meetsm = any(Hm.contains(x, system.eps) for x in inner)
    return {"hypothesis": hyp, "meets_first": meets1, "meets_last": meetsm, "conclusion": not (meets1 and meetsm)}


# -- full pipeline --------------------------------------------------------------------------------
@dataclass(frozen=True)
class CoreConfig:
    max_period: int = 8
    depth: int = 8
    eps: object = None
    invariance_samples: int = 1000
    m: int = 2


def core_report(fmap: PLTreeMap, system, config: CoreConfig = CoreConfig()) -> dict:
    """Periodic points, classes, decompositions, germ cycles and ``W`` in one JSON-ready record."""
    tree = fmap.tree
    per = periodic_points(fmap, config.max_period, system, config.depth)
    pool = [o for o in per.orbits if not o.branchpoint and (o.in_core is None or o.in_core)]
    classes = edge_equivalence_classes(pool, tree, fmap)
    decs = [decompose_complement(tree, h, fmap) for h in classes.hull_orbits]
    phis = []
    for d in decs:
        try:
            phis.append(phi_dynamics(fmap, d, config.eps).as_dict())
        except CoreError as exc:
            phis.append({"error": str(exc)})
    out = {
        "cutoffs": {"max_period": config.max_period, "core_depth": config.depth},
        "periodic": per.as_dict(),
        "core_orbits": [o.as_dict() for o in pool],
        "classes": classes.as_dict(),
        "betweenness_violations": betweenness_violations(fmap, [p for o in pool for p in o.points]),
        "decompositions": [d.as_dict() for d in decs],
        "phi": phis,
    }
    if decs:
        sep = separating_set(fmap, decs, config.m)
        out["separating_set"] = sep.as_dict()
        out["invariance_failures"] = [str(x) for x in invariance_failures(fmap, sep.W, config.invariance_samples)]
    else:
        out["separating_set"] = None
        out["invariance_failures"] = []
    return out
