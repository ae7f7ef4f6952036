"""Regular values, monotone spanning sections and the shift sets they generate.

Everything is sampled on a grid of values ``y``.  Within an open *cell*
(an edge interval free of critical values) the preimages of ``y`` move
continuously, each along one linear piece (a *lap*), so a section is a
choice of ``m`` laps per cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .plmap import MapError, Piece, PLTreeMap
from .pointsets import PointSet
from .shift import ShiftSystem
from .tree import Point, as_fraction


class SectionError(ValueError):
    pass


@dataclass(frozen=True)
class SectionConfig:
    m: int
    resolution: Fraction = Fraction(1, 100)
    split_for_variation: bool = True
    eps: Fraction | None = None
    audit_points: int = 200

    def __post_init__(self):
        object.__setattr__(self, "resolution", as_fraction(self.resolution))
        if self.eps is not None:
            object.__setattr__(self, "eps", as_fraction(self.eps))
        if self.m < 1:
            raise SectionError("m must be positive")
        if self.resolution <= 0:
            raise SectionError("resolution must be positive")


# -- regular values ---------------------------------------------------------------
@dataclass(frozen=True)
class RegularSample:
    y: Point
    non_minimal: int
    non_maximal: int
    left: bool
    right: bool

    @property
    def regular(self) -> bool:
        return self.left and self.right


@dataclass(frozen=True)
class Component:
    """An open cell ``(lo, hi)`` on ``edge`` and the regular samples inside it."""

    edge: str
    lo: Fraction
    hi: Fraction
    samples: tuple[Point, ...]


@dataclass(frozen=True)
class RegularValueReport:
    m: int
    resolution: Fraction
    samples: tuple[RegularSample, ...]
    components: tuple[Component, ...]

    @property
    def regular(self) -> list[Point]:
        return [s.y for s in self.samples if s.regular]

    @property
    def irregular(self) -> list[Point]:
        return [s.y for s in self.samples if not s.regular]


def cell_cuts(fmap: PLTreeMap) -> dict[str, list[Fraction]]:
    """Per edge, the sorted coordinates of 0, 1 and every critical value on it."""
    cuts = {e: {Fraction(0), Fraction(1)} for e in fmap.tree.edges}
    for y in fmap.critical_values():
        if y.vertex is None:
            cuts[y.edge].add(y.t)
    return {e: sorted(c) for e, c in cuts.items()}


def classify_value(fmap: PLTreeMap, m: int, y: Point) -> RegularSample:
    pre = fmap.preimages(y)
    if pre.intervals or y.vertex is not None:
        return RegularSample(y, 0, 0, False, False)
    lo = hi = 0
    for x in pre.points:
        flags = fmap.classify_preimage(x)
        lo += flags["non_minimal"]
        hi += flags["non_maximal"]
    return RegularSample(y, lo, hi, lo >= m, hi >= m)


def regular_values(fmap: PLTreeMap, m: int, resolution) -> RegularValueReport:
    """Sample ``Reg_m`` on a grid, skipping vertices and images of vertices.

    Cells without a grid point get their midpoint as a sample.
    """
    h = as_fraction(resolution)
    if h <= 0:
        raise SectionError("resolution must be positive")
    tree = fmap.tree
    k = max(1, math.ceil(1 / h))
    vimages = {fmap.eval(tree.vertex(v)) for v in tree.vertices}
    cuts = cell_cuts(fmap)
    samples: list[RegularSample] = []
    comps: list[Component] = []
    for e in tree.edges:
        c = cuts[e]
        grid = [Fraction(i, k) for i in range(1, k)]
        for lo, hi in zip(c, c[1:]):
            ts = [t for t in grid if lo < t < hi] or [(lo + hi) / 2]
            run: list[Point] = []
            for t in ts:
                y = tree.point(e, t)
                if y in vimages:
                    continue
                s = classify_value(fmap, m, y)
                samples.append(s)
                if s.regular:
                    run.append(y)
                elif run:
                    comps.append(Component(e, lo, hi, tuple(run)))
                    run = []
            if run:
                comps.append(Component(e, lo, hi, tuple(run)))
    return RegularValueReport(m, h, tuple(samples), tuple(comps))


# -- sections ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SectionComponent:
    """Laps chosen on one stretch of values, with the tabulated preimages."""

    edge: str
    lo: Fraction
    hi: Fraction
    laps: tuple[Piece, ...]
    table: tuple[tuple[Point, tuple[Point, ...]], ...]

    @property
    def values(self) -> list[Point]:
        return [y for y, _ in self.table]


@dataclass(frozen=True)
class MSection:
    m: int
    components: tuple[SectionComponent, ...]
    resolution: Fraction
    note: str = "sampled section; closures approximated by samples plus component limits"


def lap_solution(fmap: PLTreeMap, lap: Piece, edge: str, t: Fraction) -> Point:
    """The point of ``lap`` mapping to ``(edge, t)``, allowing ``t`` at the closure of a cell."""
    tree = fmap.tree
    y = tree.point(edge, t)
    s = lap.solve(tree, y)
    if s is None:
        raise SectionError(f"lap on {lap.edge} [{lap.t0}, {lap.t1}] does not reach {y}")
    return tree.point(lap.edge, s)


def _laps_over(fmap: PLTreeMap, edge: str, lo: Fraction, hi: Fraction) -> list[Piece]:
    """Non-constant pieces whose image arc covers the closed cell ``[lo, hi]`` of ``edge``."""
    out = []
    for p in fmap.all_pieces():
        if p.constant:
            continue
        for seg in p.arc.segments:
            a, b = min(seg.start, seg.end), max(seg.start, seg.end)
            if seg.edge == edge and a <= lo and hi <= b:
                out.append(p)
                break
    return out


def _spread_choice(n: int, m: int) -> list[int]:
    if m == 1:
        return [0]
    return sorted({round(j * (n - 1) / (m - 1)) for j in range(m)})


def _metrics(fmap: PLTreeMap, rows: Sequence[tuple[Point, ...]]) -> tuple[Fraction, Fraction]:
    tree = fmap.tree
    delta = None
    for row in rows:
        for i in range(len(row)):
            for j in range(i + 1, len(row)):
                d = tree.distance(row[i], row[j])
                if delta is None or d < delta:
                    delta = d
    var = Fraction(0)
    m = len(rows[0]) if rows else 0
    for j in range(m):
        col = [r[j] for r in rows]
        var = max(var, _diameter(tree, col))
    return (delta if delta is not None else Fraction(0)), var


def _diameter(tree, pts: Sequence[Point]) -> Fraction:
    locs = [tree.home(p) for p in pts]
    if all(l is not None for l in locs) and len({l[0] for l in locs}) == 1:
        ts = [l[1] for l in locs]
        return (max(ts) - min(ts)) * tree.length[locs[0][0]]
    best = Fraction(0)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = max(best, tree.distance(pts[i], pts[j]))
    return best


def section_component(fmap: PLTreeMap, m: int, edge: str, lo, hi, values: Sequence) -> SectionComponent:
    """Monotone spanning section on the cell ``(lo, hi)`` of ``edge``, tabulated at ``values``.

    The extreme laps give the ``≺``-least and greatest preimages; the
    interior laps are spread evenly through the ``≺``-sorted lap list.
    Values may sit on the cell boundary, where laps are continued.
    """
    tree = fmap.tree
    lo, hi = as_fraction(lo), as_fraction(hi)
    laps = _laps_over(fmap, edge, lo, hi)
    if len(laps) < m:
        where = tree.point(edge, (lo + hi) / 2)
        raise SectionError(f"only {len(laps)} preimages at {where}, need {m}")
    mid = (lo + hi) / 2
    laps.sort(key=lambda p: tree.order_key(lap_solution(fmap, p, edge, mid)))
    chosen = [laps[i] for i in _spread_choice(len(laps), m)]
    table = []
    for v in values:
        t = as_fraction(v) if not isinstance(v, Point) else tree.home(v)[1]
        table.append((tree.point(edge, t), tuple(lap_solution(fmap, p, edge, t) for p in chosen)))
    return SectionComponent(edge, lo, hi, tuple(chosen), tuple(table))


class _RunMetrics:
    """Mesh and variation of a growing run of rows, updated one row at a time."""

    def __init__(self, tree):
        self.tree = tree
        self.delta: Fraction | None = None
        self.cols: list[list[Point]] = []
        self.spans: list[dict[str, tuple[Fraction, Fraction]]] = []
        self.diam: list[Fraction] = []

    def trial(self, row: tuple[Point, ...]) -> tuple[Fraction, Fraction]:
        """``(mesh, variation)`` of the run with ``row`` appended (state unchanged)."""
        rd, _ = _metrics_row(self.tree, row)
        delta = rd if self.delta is None or (rd is not None and rd < self.delta) else self.delta
        var = Fraction(0)
        for j, x in enumerate(row):
            var = max(var, self._col_diam(j, x)[0])
        return (delta if delta is not None else Fraction(0)), var

    def push(self, row: tuple[Point, ...]) -> None:
        rd, _ = _metrics_row(self.tree, row)
        if self.delta is None or (rd is not None and rd < self.delta):
            self.delta = rd
        if not self.cols:
            self.cols = [[] for _ in row]
            self.spans = [{} for _ in row]
            self.diam = [Fraction(0)] * len(row)
        for j, x in enumerate(row):
            self.diam[j], self.spans[j] = self._col_diam(j, x)
            self.cols[j].append(x)

    def _col_diam(self, j: int, x: Point):
        """New diameter of column ``j`` with ``x`` added, and the edges still holding the whole column."""
        tree = self.tree
        locs = dict(tree.locations(x))
        if not self.cols or not self.cols[j]:
            return Fraction(0), {e: (t, t) for e, t in locs.items()}
        spans = {
            e: (min(lo, locs[e]), max(hi, locs[e])) for e, (lo, hi) in self.spans[j].items() if e in locs
        }
        if spans:
            e, (lo, hi) = next(iter(spans.items()))
            return (hi - lo) * tree.length[e], spans
        d = max([self.diam[j]] + [tree.distance(x, y) for y in self.cols[j]])
        return d, {}


def _metrics_row(tree, row) -> tuple[Fraction | None, None]:
    best = None
    for i in range(len(row)):
        for j in range(i + 1, len(row)):
            d = tree.distance(row[i], row[j])
            if best is None or d < best:
                best = d
    return best, None


def _split(fmap: PLTreeMap, comp: SectionComponent) -> list[SectionComponent]:
    """Cut a tabulated component into runs with variation below half the mesh."""
    rows = comp.table
    pieces: list[list] = []
    cur: list = []
    run = _RunMetrics(fmap.tree)
    for row in rows:
        delta, var = run.trial(row[1])
        if cur and not var < delta / 2:
            pieces.append(cur)
            cur = [row]
            run = _RunMetrics(fmap.tree)
        else:
            cur = cur + [row]
        run.push(row[1])
    if cur:
        pieces.append(cur)
    tree = fmap.tree
    out = []
    for k, run in enumerate(pieces):
        a = comp.lo if k == 0 else (tree.home(pieces[k - 1][-1][0])[1] + tree.home(run[0][0])[1]) / 2
        b = comp.hi if k == len(pieces) - 1 else (tree.home(run[-1][0])[1] + tree.home(pieces[k + 1][0][0])[1]) / 2
        out.append(SectionComponent(comp.edge, a, b, comp.laps, tuple(run)))
    return out


def build_section(fmap: PLTreeMap, m: int, report: RegularValueReport, split_for_variation: bool = True) -> MSection:
    comps: list[SectionComponent] = []
    for c in report.components:
        for y in c.samples:
            n = fmap.preimages(y).components
            if n < m:
                raise SectionError(f"only {n} preimages at {y}, need {m}")
        sc = section_component(fmap, m, c.edge, c.lo, c.hi, c.samples)
        comps.extend(_split(fmap, sc) if split_for_variation else [sc])
    return MSection(m, tuple(comps), report.resolution)


# -- metrics ----------------------------------------------------------------------------
@dataclass(frozen=True)
class SectionMetrics:
    edge: str
    lo: Fraction
    hi: Fraction
    mesh: Fraction
    variation: Fraction

    @property
    def mesh_positive(self) -> bool:
        return self.mesh > 0

    @property
    def variation_ok(self) -> bool:
        return self.variation < self.mesh / 2

    def as_dict(self) -> dict:
        return {
            "edge": self.edge,
            "lo": str(self.lo),
            "hi": str(self.hi),
            "mesh": str(self.mesh),
            "variation": str(self.variation),
            "variation_below_half_mesh": self.variation_ok,
        }


def component_metrics(fmap: PLTreeMap, comp: SectionComponent) -> SectionMetrics:
    if not comp.table:
        raise SectionError("empty component table")
    delta, var = _metrics(fmap, [r for _, r in comp.table])
    return SectionMetrics(comp.edge, comp.lo, comp.hi, delta, var)


def section_metrics(fmap: PLTreeMap, section: MSection) -> list[SectionMetrics]:
    return [component_metrics(fmap, c) for c in section.components]


def is_monotone(fmap: PLTreeMap, section: MSection) -> bool:
    tree = fmap.tree
    return all(
        all(tree.precedes(a, b) for a, b in zip(row, row[1:]))
        for c in section.components
        for _, row in c.table
    )


def is_spanning(fmap: PLTreeMap, section: MSection) -> bool:
    for c in section.components:
        for y, row in c.table:
            lo, hi = fmap.extreme_preimages(y)
            if row[0] != lo or row[-1] != hi:
                return False
    return True


# -- shift sets ---------------------------------------------------------------------------
@dataclass(eq=False)
class SectionShift:
    system: ShiftSystem
    h_minus: PointSet
    h_plus: PointSet
    h_sharp: PointSet
    section: MSection
    audit: dict = field(default_factory=dict)


def limit_points(fmap: PLTreeMap, comp: SectionComponent) -> list[tuple[Point, ...]]:
    """Continuations of the chosen laps to both ends of the component."""
    return [tuple(lap_solution(fmap, p, comp.edge, t) for p in comp.laps) for t in (comp.lo, comp.hi)]


def shift_sets_from_section(
    section: MSection, fmap: PLTreeMap, eps=None, audit_points: int = 200
) -> SectionShift:
    """``H_j`` as sampled closures of ``psi_j`` together with ``H-``, ``H+`` and ``H#``."""
    if not section.components or not any(c.table for c in section.components):
        raise SectionError("section has no tabulated values")
    tree = fmap.tree
    eps = as_fraction(eps) if eps is not None else section.resolution
    cols: list[list[Point]] = [[] for _ in range(section.m)]
    for c in section.components:
        rows = [r for _, r in c.table] + limit_points(fmap, c)
        for r in rows:
            for j, x in enumerate(r):
                cols[j].append(x)
    sets = tuple(PointSet(tree, tuple(col)) for col in cols)
    h_minus, h_plus = sets[0], sets[-1]
    sharp = tuple(x for x in h_minus.points if h_plus.contains(x, eps))
    system = ShiftSystem(tree, sets, eps)
    audit = shift_condition_audit(system, fmap, audit_points)
    system.audit.update(audit)
    return SectionShift(system, h_minus, h_plus, PointSet(tree, sharp), section, audit)


def shift_condition_audit(system: ShiftSystem, fmap: PLTreeMap, count: int = 200) -> dict:
    """Check ``f(H_j) ⊇ H`` on sampled points of ``H``: some preimage lies in ``H_j``."""
    pts = list(dict.fromkeys(p for h in system.sets for p in h.points))
    step = max(1, len(pts) // count)
    probe = pts[::step][:count]
    failures = []
    for y in probe:
        pre = fmap.preimages(y)
        cands = pre.candidates()
        for j, h in enumerate(system.sets, start=1):
            if not any(h.contains(x, system.eps) for x in cands):
                failures.append({"set": j, "point": str(y)})
    return {"checked": len(probe), "eps": str(system.eps), "failures": failures, "passes": not failures}


def prepare_shift(fmap: PLTreeMap, config: SectionConfig) -> SectionShift:
    """Regular values, section and shift sets in one call."""
    report = regular_values(fmap, config.m, config.resolution)
    section = build_section(fmap, config.m, report, config.split_for_variation)
    return shift_sets_from_section(section, fmap, config.eps, config.audit_points)


__all__ = [
    "SectionConfig",
    "SectionError",
    "RegularSample",
    "RegularValueReport",
    "Component",
    "SectionComponent",
    "MSection",
    "SectionMetrics",
    "SectionShift",
    "regular_values",
    "build_section",
    "section_component",
    "section_metrics",
    "component_metrics",
    "shift_sets_from_section",
    "shift_condition_audit",
    "prepare_shift",
    "is_monotone",
    "is_spanning",
    "lap_solution",
    "MapError",
]
