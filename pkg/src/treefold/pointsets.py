"""Finite unions of points and closed edge intervals, with epsilon-membership.

Sampled closures (shift sets, dividing sets, regions of the hull-orbit
decomposition) are all stored as a :class:`PointSet`.  Membership at
resolution ``eps`` uses the closed-ball convention: distance exactly
``eps`` counts as inside.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .tree import Point, Tree, as_fraction


@dataclass(frozen=True)
class Interval:
    edge: str
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval with lo > hi")

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi


def _merge(intervals: list[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    out: list[list[Fraction]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


@dataclass(eq=False)
class PointSet:
    tree: Tree
    points: tuple[Point, ...] = ()
    intervals: tuple[Interval, ...] = ()
    _by_edge: dict = field(default=None, repr=False)
    _vertices: frozenset = field(default=None, repr=False)
    _spans: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.points = tuple(dict.fromkeys(self.points))
        by_edge: dict[str, list[Fraction]] = defaultdict(list)
        verts = set()
        for p in self.points:
            if p.vertex is not None:
                verts.add(p.vertex)
            else:
                by_edge[p.edge].append(p.t)
        spans: dict[str, list[tuple[Fraction, Fraction]]] = defaultdict(list)
        for iv in self.intervals:
            spans[iv.edge].append((iv.lo, iv.hi))
            if iv.lo == 0:
                verts.add(self.tree.parent[iv.edge])
            if iv.hi == 1:
                verts.add(iv.edge)
        self.intervals = tuple(
            Interval(e, lo, hi) for e in sorted(spans) for lo, hi in _merge(spans[e])
        )
        self._spans = {e: _merge(v) for e, v in spans.items()}
        self._by_edge = {e: sorted(ts) for e, ts in by_edge.items()}
        self._vertices = frozenset(verts)

    # -- construction helpers -----------------------------------------
    @classmethod
    def from_intervals(cls, tree: Tree, spans: Iterable[tuple[str, object, object]]) -> "PointSet":
        ivs = tuple(Interval(e, as_fraction(a), as_fraction(b)) for e, a, b in spans)
        return cls(tree, (), ivs)

    @classmethod
    def whole(cls, tree: Tree) -> "PointSet":
        return cls.from_intervals(tree, [(e, 0, 1) for e in tree.edges])

    @classmethod
    def empty(cls, tree: Tree) -> "PointSet":
        return cls(tree)

    def union(self, other: "PointSet") -> "PointSet":
        return PointSet(self.tree, self.points + other.points, self.intervals + other.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.intervals

    def __len__(self) -> int:
        return len(self.points) + len(self.intervals)

    # -- distance and membership --------------------------------------
    def distance(self, x: Point) -> Fraction | None:
        """Exact distance from ``x`` to the set (None if the set is empty)."""
        tree = self.tree
        best: Fraction | None = None

        def take(d):
            nonlocal best
            if best is None or d < best:
                best = d

        vdist = _vertex_distances(tree, x)
        for v in self._vertices:
            take(vdist[v])
        for e, ts in self._by_edge.items():
            take(_edge_point_distance(tree, x, e, ts, vdist))
        for e, spans in self._spans.items():
            ln = tree.length[e]
            u = tree.parent[e]
            on_edge = [t for ee, t in tree.locations(x) if ee == e]
            for lo, hi in spans:
                if on_edge:
                    t = on_edge[0]
                    if lo <= t <= hi:
                        take(Fraction(0))
                    else:
                        take(min(abs(t - lo), abs(t - hi)) * ln)
                else:
                    take(min(vdist[u] + lo * ln, vdist[e] + (1 - hi) * ln))
        return best

    def contains(self, x: Point, eps=0) -> bool:
        d = self.distance(x)
        return d is not None and d <= as_fraction(eps)

    def covers_tree(self) -> bool:
        for e in self.tree.edges:
            spans = self._spans.get(e, [])
            if not spans or spans[0][0] != 0 or spans[0][1] != 1:
                return False
        return True

    def subset_of(self, other: "PointSet") -> bool:
        """Exact containment for interval unions (points checked individually)."""
        for p in self.points:
            if not other.contains(p):
                return False
        for iv in self.intervals:
            spans = other._spans.get(iv.edge, [])
            if iv.degenerate:
                if not other.contains(self.tree.point(iv.edge, iv.lo)):
                    return False
                continue
            if not any(lo <= iv.lo and iv.hi <= hi for lo, hi in spans):
                return False
        return True

    # -- sampling --------------------------------------------------------
    def sample(self, count: int) -> list[Point]:
        """About ``count`` points spread over the set (points first, then intervals by length)."""
        out = list(self.points)
        total = sum((iv.hi - iv.lo) * self.tree.length[iv.edge] for iv in self.intervals)
        for iv in self.intervals:
            if iv.degenerate or total == 0:
                out.append(self.tree.point(iv.edge, iv.lo))
                continue
            share = (iv.hi - iv.lo) * self.tree.length[iv.edge] / total
            k = max(2, int(share * count))
            for i in range(k + 1):
                out.append(self.tree.point(iv.edge, iv.lo + (iv.hi - iv.lo) * Fraction(i, k)))
        return list(dict.fromkeys(out))

    def describe(self) -> dict:
        return {
            "points": [str(p) for p in self.points],
            "intervals": [[iv.edge, str(iv.lo), str(iv.hi)] for iv in self.intervals],
        }


def _vertex_distances(tree: Tree, x: Point) -> dict[str, Fraction]:
    """Distance from ``x`` to every vertex, by a walk over the tree."""
    dist: dict[str, Fraction] = {}
    stack: list[tuple[str, Fraction]] = []
    if x.vertex is not None:
        stack.append((x.vertex, Fraction(0)))
    else:
        ln = tree.length[x.edge]
        stack.append((tree.parent[x.edge], x.t * ln))
        stack.append((x.edge, (1 - x.t) * ln))
    while stack:
        v, d = stack.pop()
        if v in dist and dist[v] <= d:
            continue
        dist[v] = d
        for e, t in tree.incident_edges(v):
            other = e if t == 0 else tree.parent[e]
            nd = d + tree.length[e]
            if other not in dist or dist[other] > nd:
                stack.append((other, nd))
    return dist


def _edge_point_distance(tree, x, e, ts, vdist) -> Fraction | None:
    ln = tree.length[e]
    on_edge = [t for ee, t in tree.locations(x) if ee == e]
    if on_edge:
        t = on_edge[0]
        k = bisect_left(ts, t)
        cands = []
        if k < len(ts):
            cands.append(abs(ts[k] - t))
        if k > 0:
            cands.append(abs(t - ts[k - 1]))
        return min(cands) * ln
    u = tree.parent[e]
    # nearest samples to each end of the edge
    near_u = ts[0] * ln + vdist[u]
    near_v = (1 - ts[-1]) * ln + vdist[e]
    return min(near_u, near_v)


def within_range(ts: list[Fraction], lo: Fraction, hi: Fraction) -> list[Fraction]:
    return ts[bisect_left(ts, lo): bisect_right(ts, hi)]
