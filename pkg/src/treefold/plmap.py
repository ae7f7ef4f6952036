"""Continuous piecewise-linear tree maps.

On each edge a map is given by breakpoints ``0 = t_0 < ... < t_k = 1`` and
the images of those breakpoints.  Between consecutive breakpoints the
image runs along ``hull(image_left, image_right)`` at constant speed, so
every piece is either constant or injective.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .pointsets import Interval, _merge
from .tree import Arc, Point, Tree, TreeError, as_fraction, build_tree, interval_tree


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class Piece:
    edge: str
    t0: Fraction
    t1: Fraction
    img0: Point
    img1: Point
    arc: Arc

    @property
    def constant(self) -> bool:
        return self.arc.degenerate

    def at(self, tree: Tree, t: Fraction) -> Point:
        return tree.point_on_arc(self.arc, (t - self.t0) / (self.t1 - self.t0))

    def solve(self, tree: Tree, y: Point) -> Fraction | None:
        """Edge coordinate in this piece mapping to ``y`` (None if off the image or constant)."""
        if self.constant:
            return None
        s = tree.arc_parameter(self.arc, y)
        if s is None:
            return None
        return self.t0 + s * (self.t1 - self.t0)


@dataclass(eq=False)
class PLTreeMap:
    tree: Tree
    breaks: Mapping[str, tuple[tuple[Fraction, Point], ...]]
    name: str = ""
    pieces: dict = field(default=None, repr=False)
    _ts: dict = field(default=None, repr=False)

    def __post_init__(self):
        tree = self.tree
        pieces: dict[str, list[Piece]] = {}
        ts: dict[str, list[Fraction]] = {}
        clean = {}
        for e in tree.edges:
            if e not in self.breaks:
                raise MapError(f"no breakpoints for edge {e!r}")
            rows = [(as_fraction(t), img) for t, img in self.breaks[e]]
            tlist = [t for t, _ in rows]
            if tlist[0] != 0 or tlist[-1] != 1:
                raise MapError(f"breakpoints on {e!r} must start at 0 and end at 1")
            if any(a >= b for a, b in zip(tlist, tlist[1:])):
                raise MapError(f"breakpoints on {e!r} must be strictly increasing")
            rows = [(t, _canonical(tree, img)) for t, img in rows]
            clean[e] = tuple(rows)
            ts[e] = tlist
            pieces[e] = [
                Piece(e, a, b, ia, ib, tree.hull(ia, ib))
                for (a, ia), (b, ib) in zip(rows, rows[1:])
            ]
        extra = set(self.breaks) - set(tree.edges)
        if extra:
            raise MapError(f"breakpoints given for unknown edges {sorted(extra)}")
        self.breaks = clean
        self.pieces = pieces
        self._ts = ts
        for v in tree.vertices:
            imgs = {self._vertex_image_on(e, t) for e, t in tree.incident_edges(v)}
            if len(imgs) != 1:
                raise MapError(f"map not continuous at vertex {v!r}: images {sorted(map(str, imgs))}")

    def _vertex_image_on(self, e: str, t: Fraction) -> Point:
        rows = self.breaks[e]
        return rows[0][1] if t == 0 else rows[-1][1]

    # -- evaluation ------------------------------------------------------
    def piece_at(self, e: str, t: Fraction, side: int = 1) -> Piece:
        """The piece on edge ``e`` containing ``t``; ``side`` picks the right (+1) or left (-1) one at a breakpoint."""
        ts = self._ts[e]
        if side > 0:
            k = bisect_right(ts, t) - 1
            k = min(k, len(ts) - 2)
        else:
            k = bisect_left(ts, t) - 1
            k = max(k, 0)
        return self.pieces[e][k]

    def eval(self, x: Point) -> Point:
        e, t = self.tree.locations(x)[0]
        return self.piece_at(e, t).at(self.tree, t)

    __call__ = eval

    def iterate(self, x: Point, n: int) -> Point:
        for _ in range(n):
            x = self.eval(x)
        return x

    def orbit(self, x: Point, n: int) -> list[Point]:
        out = [x]
        for _ in range(n - 1):
            out.append(self.eval(out[-1]))
        return out

    def all_pieces(self) -> list[Piece]:
        return [p for e in self.tree.edges for p in self.pieces[e]]

    # -- germs -----------------------------------------------------------
    def germ_piece(self, v: str, e: str) -> Piece:
        """Piece of edge ``e`` adjacent to its endpoint ``v``."""
        t = Fraction(1) if e == v else Fraction(0)
        return self.pieces[e][-1] if t == 1 else self.pieces[e][0]

    def germ_target(self, v: str, e: str) -> Point | None:
        """Far-end image of the first piece leaving ``v`` along ``e`` (None if that piece is constant)."""
        p = self.germ_piece(v, e)
        if p.constant:
            return None
        return p.img0 if e == v else p.img1

    def germ_is_monotone(self, y: str, index: int) -> bool:
        """Whether the germ of branch ``index`` at ``y`` maps into a single closed branch at ``f(y)``.

        A linear piece maps a short germ onto an arc issuing from ``f(y)``,
        so every germ of a piecewise-linear map qualifies.
        """
        self.tree.branch_edge(y, index)
        return True

    def germ_branch(self, v: str, e: str) -> int | None:
        """Branch at ``f(v)`` entered by the germ along ``e`` (None if collapsed).

        Only meaningful when ``f(v)`` is a vertex.
        """
        tgt = self.germ_target(v, e)
        if tgt is None:
            return None
        fv = self.eval(self.tree.vertex(v))
        if fv.vertex is None:
            raise MapError("germ branch requested at a non-vertex image")
        arc = self.tree.hull(fv, tgt)
        seg = arc.segments[0]
        return self.tree.branch_of_edge(fv.vertex, seg.edge)

    # -- preimages -------------------------------------------------------
    def preimages(self, y: Point) -> "PreimageSet":
        tree = self.tree
        pts: set[Point] = set()
        spans: dict[str, list[tuple[Fraction, Fraction]]] = {}
        for e in tree.edges:
            for p in self.pieces[e]:
                if p.constant:
                    if p.img0 == y:
                        spans.setdefault(e, []).append((p.t0, p.t1))
                    continue
                t = p.solve(tree, y)
                if t is not None:
                    pts.add(tree.point(e, t))
        intervals = [Interval(e, lo, hi) for e in spans for lo, hi in _merge(spans[e])]
        covered = set()
        for iv in intervals:
            covered.add(tree.point(iv.edge, iv.lo))
            covered.add(tree.point(iv.edge, iv.hi))
        lone = []
        for x in pts:
            if x in covered:
                continue
            if any(
                iv.edge == e and iv.lo <= t <= iv.hi
                for iv in intervals
                for e, t in tree.locations(x)
            ):
                continue
            lone.append(x)
        return PreimageSet(tree, tuple(tree.sorted(lone)), tuple(intervals))

    def extreme_preimages(self, y: Point) -> tuple[Point, Point]:
        pre = self.preimages(y)
        cands = pre.candidates()
        if not cands:
            raise MapError(f"{y} has no preimage; the map is not surjective")
        ordered = self.tree.sorted(cands)
        return ordered[0], ordered[-1]

    def classify_preimage(self, x: Point) -> dict[str, bool]:
        """Flags ``non_minimal`` and ``non_maximal`` for ``x`` as a preimage of ``f(x)``."""
        tree = self.tree
        y = self.eval(x)
        if y.vertex is not None:
            raise MapError(f"f({x}) = {y} is a vertex; the classification needs a non-vertex value")
        lower = upper = False
        for sign, p in self._germ_pieces(x):
            if p.constant:
                continue
            far = p.img1 if sign > 0 else p.img0
            seg = tree.hull(y, far).segments[0]
            if seg.end < seg.start:
                lower = True
            else:
                upper = True
        return {"non_minimal": lower, "non_maximal": upper}

    def _germ_pieces(self, x: Point) -> list[tuple[int, Piece]]:
        out = []
        for e, t in self.tree.locations(x):
            if t < 1:
                out.append((1, self.piece_at(e, t, 1)))
            if t > 0:
                out.append((-1, self.piece_at(e, t, -1)))
        return out

    # -- global structure ------------------------------------------------
    def critical_values(self) -> list[Point]:
        vals = {img for e in self.tree.edges for _, img in self.breaks[e]}
        return self.tree.sorted(vals)

    def is_surjective(self) -> bool:
        cover: dict[str, list[tuple[Fraction, Fraction]]] = {}
        for p in self.all_pieces():
            for s in p.arc.segments:
                cover.setdefault(s.edge, []).append((min(s.start, s.end), max(s.start, s.end)))
        for e in self.tree.edges:
            merged = _merge(cover.get(e, []))
            if merged != [(Fraction(0), Fraction(1))]:
                return False
        return True

    def partition_points(self) -> set[Point]:
        return {self.tree.point(e, t) for e in self.tree.edges for t in self._ts[e]}

    def is_markov(self) -> Point | None:
        """None when Markov, else the first breakpoint whose image is not a partition point."""
        parts = self.partition_points()
        for e in self.tree.edges:
            for t, img in self.breaks[e]:
                if img not in parts:
                    return self.tree.point(e, t)
        return None


def _canonical(tree: Tree, img: Point) -> Point:
    if img.vertex is not None:
        return tree.vertex(img.vertex)
    return tree.point(img.edge, img.t)


@dataclass(frozen=True)
class PreimageSet:
    tree: Tree
    points: tuple[Point, ...]
    intervals: tuple[Interval, ...]

    @property
    def count(self) -> float:
        """Number of preimages; ``inf`` when some interval maps to the value."""
        if any(not iv.degenerate for iv in self.intervals):
            return math.inf
        return len(self.points) + len(self.intervals)

    @property
    def components(self) -> int:
        return len(self.points) + len(self.intervals)

    def candidates(self) -> list[Point]:
        out = list(self.points)
        for iv in self.intervals:
            out.append(self.tree.point(iv.edge, iv.lo))
            out.append(self.tree.point(iv.edge, iv.hi))
        return out

    def as_pointset(self):
        from .pointsets import PointSet

        return PointSet(self.tree, self.points, self.intervals)

    def contains(self, x: Point) -> bool:
        if x in self.points:
            return True
        return any(
            iv.edge == e and iv.lo <= t <= iv.hi
            for iv in self.intervals
            for e, t in self.tree.locations(x)
        )


# -- Markov matrices ----------------------------------------------------------
@dataclass(frozen=True)
class IncidenceMatrix:
    states: tuple[tuple[str, Fraction, Fraction], ...]
    entries: tuple[tuple[int, ...], ...]

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(len(self.states), len(self.states))

    def transpose(self) -> "IncidenceMatrix":
        n = len(self.states)
        return IncidenceMatrix(self.states, tuple(tuple(self.entries[j][i] for j in range(n)) for i in range(n)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IncidenceMatrix":
        n = len(rows)
        return cls(tuple(("s", Fraction(i), Fraction(i + 1)) for i in range(n)), tuple(tuple(int(a) for a in r) for r in rows))


def incidence_matrix(fmap: PLTreeMap) -> IncidenceMatrix:
    """Covering counts between the linear pieces of a Markov map.

    Constant pieces stay in the state list; they cover nothing, so their
    rows vanish, but they may still be covered.
    """
    bad = fmap.is_markov()
    if bad is not None:
        raise MapError(f"map is not Markov: breakpoint {bad} maps off the partition")
    pieces = fmap.all_pieces()
    rows = []
    for p in pieces:
        row = []
        for q in pieces:
            n = 0
            for s in p.arc.segments:
                lo, hi = min(s.start, s.end), max(s.start, s.end)
                if s.edge == q.edge and lo <= q.t0 and q.t1 <= hi:
                    n += 1
            row.append(n)
        rows.append(tuple(row))
    return IncidenceMatrix(tuple((p.edge, p.t0, p.t1) for p in pieces), tuple(rows))


@dataclass(frozen=True)
class EntropyEnclosure:
    value: float
    lower: float
    upper: float
    rho_lower: Fraction
    rho_upper: Fraction

    @property
    def width(self) -> float:
        return self.upper - self.lower


def spectral_enclosure(mat: IncidenceMatrix | Sequence[Sequence[int]], tol: float = 1e-9) -> EntropyEnclosure:
    """Certified bracket for the spectral radius, via Collatz-Wielandt bounds per irreducible block."""
    rows = mat.entries if isinstance(mat, IncidenceMatrix) else mat
    a = np.array(rows, dtype=np.int64)
    n = a.shape[0] if a.size else 0
    best_lo = best_hi = Fraction(0)
    if n:
        _, labels = connected_components(a != 0, directed=True, connection="strong")
        for lab in sorted(set(labels.tolist())):
            idx = np.flatnonzero(labels == lab)
            block = a[np.ix_(idx, idx)]
            if not block.any():
                continue
            lo, hi = _block_bounds(block, tol)
            if lo > best_lo:
                best_lo = lo
            if hi > best_hi:
                best_hi = hi
    if best_hi == 0:
        return EntropyEnclosure(0.0, 0.0, 0.0, Fraction(0), Fraction(0))
    lower = math.log(best_lo) if best_lo >= 1 else 0.0
    upper = math.log(best_hi) if best_hi >= 1 else 0.0
    return EntropyEnclosure((lower + upper) / 2, lower, upper, best_lo, best_hi)


def _block_bounds(block: np.ndarray, tol: float) -> tuple[Fraction, Fraction]:
    k = block.shape[0]
    vals, vecs = np.linalg.eig(block.astype(float))
    x = np.abs(vecs[:, int(np.argmax(vals.real))].real)
    if not np.all(x > 0):
        x = np.ones(k)
    shifted = block.astype(float) + np.eye(k)
    rows = [[int(v) for v in r] for r in block]
    for _ in range(2000):
        x = x / x.max()
        fx = [Fraction(float(v)) for v in x]
        if all(v > 0 for v in fx):
            ratios = []
            for i in range(k):
                ax = sum((rows[i][j] * fx[j] for j in range(k) if rows[i][j]), Fraction(0))
                ratios.append(ax / fx[i])
            lo, hi = min(ratios), max(ratios)
            if lo > 0 and math.log(hi) - math.log(lo) <= tol:
                return lo, hi
        for _ in range(50):
            x = shifted @ x
            x = x / x.max()
    return lo, hi


def markov_entropy(mat: IncidenceMatrix | Sequence[Sequence[int]], tol: float = 1e-9) -> float:
    """Logarithm of the spectral radius (0 for nilpotent matrices)."""
    return spectral_enclosure(mat, tol).value


# -- fold diagnostics ----------------------------------------------------------
@dataclass(frozen=True)
class FoldSample:
    y: Point
    count: float
    m_fold: bool
    two_fold: bool


@dataclass(frozen=True)
class FoldReport:
    m: int
    samples: tuple[FoldSample, ...]

    @property
    def failures_m(self) -> list[Point]:
        return [s.y for s in self.samples if not s.m_fold]

    @property
    def failures_2(self) -> list[Point]:
        return [s.y for s in self.samples if not s.two_fold]

    @property
    def passes(self) -> bool:
        return not self.failures_m

    @property
    def passes_2(self) -> bool:
        return not self.failures_2


def mfold_report(fmap: PLTreeMap, m: int, samples: Iterable[Point]) -> FoldReport:
    rows = []
    for y in samples:
        c = fmap.preimages(y).count
        rows.append(FoldSample(y, c, c >= m, c >= 2))
    return FoldReport(m, tuple(rows))


def grid_points(tree: Tree, resolution, include_vertices: bool = True) -> list[Point]:
    """Points at spacing ``resolution`` (in edge coordinates) on every edge."""
    h = as_fraction(resolution)
    k = max(1, math.ceil(1 / h))
    out: list[Point] = []
    if include_vertices:
        out.extend(tree.vertex(v) for v in tree.vertices)
    for e in tree.edges:
        out.extend(tree.point(e, Fraction(i, k)) for i in range(1, k))
    return out


# -- constructors ----------------------------------------------------------------
def interval_map(nodes: Sequence[tuple[object, object]], name: str = "", tree: Tree | None = None) -> PLTreeMap:
    """PL self-map of ``[0, 1]`` through the given ``(x, f(x))`` nodes."""
    tree = tree or interval_tree()
    e = tree.edges[0]
    rows = [(as_fraction(x), tree.point(e, as_fraction(y))) for x, y in nodes]
    return PLTreeMap(tree, {e: tuple(rows)}, name=name)


def path_interval_map(nodes: Sequence[tuple[object, object]], cuts: Sequence[object], name: str = "") -> PLTreeMap:
    """PL self-map of ``[0, 1]`` subdivided at ``cuts`` into a path of edges.

    Vertices are named ``"v0" .. "vk"`` from left to right; ``nodes`` use
    the global coordinate.
    """
    cut = [Fraction(0), *sorted(as_fraction(c) for c in cuts), Fraction(1)]
    if any(a >= b for a, b in zip(cut, cut[1:])):
        raise MapError("cuts must lie strictly inside (0, 1) and be distinct")
    names = [f"v{i}" for i in range(len(cut))]
    tree = build_tree(
        names[0],
        {names[i + 1]: names[i] for i in range(len(cut) - 1)},
        {n: 1 for n in names[1:]},
        {names[i + 1]: cut[i + 1] - cut[i] for i in range(len(cut) - 1)},
    )
    xs = [as_fraction(x) for x, _ in nodes]
    ys = [as_fraction(y) for _, y in nodes]

    def at(x: Fraction) -> Fraction:
        k = bisect_right(xs, x) - 1
        k = min(max(k, 0), len(xs) - 2)
        return ys[k] + (ys[k + 1] - ys[k]) * (x - xs[k]) / (xs[k + 1] - xs[k])

    def point(x: Fraction) -> Point:
        k = max(bisect_right(cut, x) - 1, 0)
        k = min(k, len(cut) - 2)
        return tree.point(names[k + 1], (x - cut[k]) / (cut[k + 1] - cut[k]))

    breaks = {}
    for i in range(len(cut) - 1):
        a, b = cut[i], cut[i + 1]
        inner = sorted({a, b, *(x for x in xs if a < x < b)})
        breaks[names[i + 1]] = tuple(((x - a) / (b - a), point(at(x))) for x in inner)
    return PLTreeMap(tree, breaks, name=name)


def identity_map(tree: Tree, name: str = "identity") -> PLTreeMap:
    return PLTreeMap(
        tree,
        {e: ((Fraction(0), tree.vertex(tree.parent[e])), (Fraction(1), tree.vertex(e))) for e in tree.edges},
        name=name,
    )


def tent_map() -> PLTreeMap:
    return interval_map([(0, 0), (Fraction(1, 2), 1), (1, 0)], name="tent")


def flat_tent_map() -> PLTreeMap:
    """The tent map with its top flattened over the middle third."""
    return interval_map([(0, 0), (Fraction(1, 3), 1), (Fraction(2, 3), 1), (1, 0)], name="g")


def sawtooth_map(m: int) -> PLTreeMap:
    """``m`` full laps alternating 0 → 1 → 0 ..."""
    if m < 1:
        raise MapError("sawtooth needs m >= 1")
    return interval_map([(Fraction(i, m), i % 2) for i in range(m + 1)], name=f"sawtooth{m}")


def three_star_map() -> PLTreeMap:
    """Markov map of the 3-star fixing the center; each leg folds over the other two."""
    from .tree import star_tree

    tree = star_tree(3)
    c = tree.vertex(tree.root)
    names = tree.edges
    rows = {}
    for k, e in enumerate(names):
        nxt, nxt2 = names[(k + 1) % 3], names[(k + 2) % 3]
        rows[e] = (
            (Fraction(0), c),
            (Fraction(1, 3), tree.vertex(nxt)),
            (Fraction(2, 3), c),
            (Fraction(1), tree.vertex(nxt2)),
        )
    return PLTreeMap(tree, rows, name="star3")


__all__ = [
    "MapError",
    "Piece",
    "PLTreeMap",
    "PreimageSet",
    "IncidenceMatrix",
    "EntropyEnclosure",
    "incidence_matrix",
    "spectral_enclosure",
    "markov_entropy",
    "FoldReport",
    "path_interval_map",
    "FoldSample",
    "mfold_report",
    "grid_points",
    "interval_map",
    "identity_map",
    "tent_map",
    "flat_tent_map",
    "sawtooth_map",
    "three_star_map",
    "TreeError",
]
