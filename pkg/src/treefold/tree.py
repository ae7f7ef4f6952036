"""Finite rooted metric trees, addresses and the branch-lexicographic order.

Edges are named by their child vertex: edge ``v`` is the closed interval
``[parent(v), v]``, parametrized by ``t`` in ``[0, 1]`` measured from the
parent.  Every coordinate is a :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

LESS, EQUAL, GREATER = -1, 0, 1


class TreeError(ValueError):
    pass


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted as tree coordinates; use Fraction or 'p/q'")
    return Fraction(value)


@dataclass(frozen=True)
class Point:
    """A point of a tree in canonical form.

    Either ``vertex`` is set, or ``edge`` names a (child) vertex and
    ``t`` lies strictly between 0 and 1.  Build edge points with
    :meth:`Tree.point` so that endpoint positions collapse to vertices.
    """

    vertex: str | None = None
    edge: str | None = None
    t: Fraction | None = None

    @classmethod
    def at(cls, vertex: str) -> "Point":
        return cls(vertex=vertex)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __str__(self) -> str:
        if self.vertex is not None:
            return self.vertex
        return f"{self.edge}:{self.t}"


@dataclass(frozen=True)
class Address:
    indices: tuple[int, ...]
    tail_edge: str | None
    tail_position: Fraction | None

    @property
    def is_vertex(self) -> bool:
        return self.tail_position == 1

    @property
    def is_root(self) -> bool:
        return self.tail_edge is None


@dataclass(frozen=True)
class Segment:
    """Directed piece of an arc inside one edge, from ``start`` to ``end`` (edge coordinates)."""

    edge: str
    start: Fraction
    end: Fraction


@dataclass(frozen=True)
class Arc:
    """The unique arc between two points, as directed segments."""

    source: Point
    target: Point
    segments: tuple[Segment, ...]
    lengths: tuple[Fraction, ...]

    @property
    def length(self) -> Fraction:
        return sum(self.lengths, Fraction(0))

    @property
    def degenerate(self) -> bool:
        return not self.segments


@dataclass(frozen=True, eq=False)
class Tree:
    root: str
    parent: Mapping[str, str]
    index: Mapping[str, int]
    length: Mapping[str, Fraction]
    children: Mapping[str, tuple[str, ...]] = field(repr=False)
    level: Mapping[str, int] = field(repr=False)
    _addr: Mapping[str, tuple[int, ...]] = field(repr=False)

    # -- structure -----------------------------------------------------
    @property
    def vertices(self) -> tuple[str, ...]:
        return (self.root, *self.parent.keys())

    @property
    def edges(self) -> tuple[str, ...]:
        return tuple(self.parent.keys())

    def valence(self, v: str) -> int:
        n = len(self.children[v])
        return n if v == self.root else n + 1

    def outdegree(self, v: str) -> int:
        return len(self.children[v])

    @property
    def branchpoints(self) -> frozenset[str]:
        return frozenset(v for v in self.vertices if self.valence(v) >= 3)

    @property
    def endpoints(self) -> frozenset[str]:
        return frozenset(v for v in self.vertices if self.valence(v) == 1)

    def edge_ends(self, e: str) -> tuple[str, str]:
        return self.parent[e], e

    def incident_edges(self, v: str) -> list[tuple[str, Fraction]]:
        """Edges at ``v`` with the coordinate ``v`` has on each."""
        out = [(c, Fraction(0)) for c in self.children[v]]
        if v != self.root:
            out.insert(0, (v, Fraction(1)))
        return out

    def branch_edge(self, v: str, i: int) -> tuple[str, Fraction]:
        """Edge carrying branch ``i`` at ``v`` (0 = incoming) and the coordinate of ``v`` on it."""
        if i == 0:
            if v == self.root:
                raise TreeError("the root has no incoming branch")
            return v, Fraction(1)
        for c in self.children[v]:
            if self.index[c] == i:
                return c, Fraction(0)
        raise TreeError(f"vertex {v!r} has no branch {i}")

    def branch_of_edge(self, v: str, e: str) -> int:
        """Index of the branch at ``v`` that starts along edge ``e``."""
        if e == v:
            return 0
        if self.parent.get(e) == v:
            return self.index[e]
        raise TreeError(f"edge {e!r} is not incident to {v!r}")

    # -- points --------------------------------------------------------
    def point(self, edge: str, t) -> Point:
        t = as_fraction(t)
        if edge not in self.parent:
            raise TreeError(f"unknown edge {edge!r}")
        if t < 0 or t > 1:
            raise TreeError(f"edge position {t} outside [0, 1]")
        if t == 0:
            return Point(vertex=self.parent[edge])
        if t == 1:
            return Point(vertex=edge)
        return Point(edge=edge, t=t)

    def vertex(self, v: str) -> Point:
        if v != self.root and v not in self.parent:
            raise TreeError(f"unknown vertex {v!r}")
        return Point(vertex=v)

    def locations(self, x: Point) -> list[tuple[str, Fraction]]:
        """All (edge, t) descriptions of ``x``."""
        if x.vertex is None:
            return [(x.edge, x.t)]
        return self.incident_edges(x.vertex)

    def home(self, x: Point) -> tuple[str, Fraction] | None:
        """The left-open edge ``(u, v]`` containing ``x`` (None for the root)."""
        if x.vertex is None:
            return x.edge, x.t
        if x.vertex == self.root:
            return None
        return x.vertex, Fraction(1)

    def edge_of(self, x: Point) -> str:
        """An edge containing ``x``: its left-open edge, or the first edge at the root."""
        h = self.home(x)
        if h is not None:
            return h[0]
        return self.children[self.root][0]

    def path_to_root(self, v: str) -> list[str]:
        out = [v]
        while out[-1] != self.root:
            out.append(self.parent[out[-1]])
        return out

    # -- metric --------------------------------------------------------
    def _up(self, x: Point) -> list[Segment]:
        h = self.home(x)
        if h is None:
            return []
        e, t = h
        segs = [Segment(e, t, Fraction(0))]
        u = self.parent[e]
        while u != self.root:
            segs.append(Segment(u, Fraction(1), Fraction(0)))
            u = self.parent[u]
        return segs

    def hull(self, x: Point, y: Point) -> Arc:
        ux, uy = self._up(x), self._up(y)
        i, j = len(ux), len(uy)
        while i > 0 and j > 0 and ux[i - 1].edge == uy[j - 1].edge:
            i -= 1
            j -= 1
        segs: list[Segment] = []
        if i < len(ux) and i == 0 and j == 0 and ux and uy and ux[0].edge == uy[0].edge:
            # both points on one edge
            e = ux[0].edge
            if ux[0].start != uy[0].start:
                segs.append(Segment(e, ux[0].start, uy[0].start))
        elif i == 0 and j > 0 and i < len(ux) and ux[0].edge == uy[j].edge:
            # x sits on the edge that y's root path crosses
            segs.append(Segment(ux[0].edge, ux[0].start, Fraction(1)))
            segs.extend(Segment(s.edge, s.end, s.start) for s in reversed(uy[:j]))
        elif j == 0 and i > 0 and j < len(uy) and uy[0].edge == ux[i].edge:
            segs.extend(ux[:i])
            segs.append(Segment(uy[0].edge, Fraction(1), uy[0].start))
        else:
            segs.extend(ux[:i])
            segs.extend(Segment(s.edge, s.end, s.start) for s in reversed(uy[:j]))
        segs = [s for s in segs if s.start != s.end]
        lengths = tuple(abs(s.end - s.start) * self.length[s.edge] for s in segs)
        return Arc(x, y, tuple(segs), lengths)

    def distance(self, x: Point, y: Point) -> Fraction:
        return self.hull(x, y).length

    def point_on_arc(self, arc: Arc, s) -> Point:
        """Point at fraction ``s`` of the arc length (constant speed)."""
        s = as_fraction(s)
        if arc.degenerate or s <= 0:
            return arc.source
        if s >= 1:
            return arc.target
        remaining = s * arc.length
        for seg, ln in zip(arc.segments, arc.lengths):
            if remaining <= ln:
                frac = remaining / ln
                return self.point(seg.edge, seg.start + (seg.end - seg.start) * frac)
            remaining -= ln
        return arc.target

    def arc_parameter(self, arc: Arc, y: Point) -> Fraction | None:
        """Fraction ``s`` with ``point_on_arc(arc, s) == y``, or None if ``y`` is off the arc."""
        if arc.degenerate:
            return Fraction(0) if y == arc.source else None
        total = arc.length
        before = Fraction(0)
        for seg, ln in zip(arc.segments, arc.lengths):
            lo, hi = min(seg.start, seg.end), max(seg.start, seg.end)
            for e, t in self.locations(y):
                if e == seg.edge and lo <= t <= hi:
                    return (before + abs(t - seg.start) * self.length[e]) / total
            before += ln
        return None

    def arc_contains(self, arc: Arc, y: Point) -> bool:
        return self.arc_parameter(arc, y) is not None

    def sub_arc(self, arc: Arc, s0, s1) -> Arc:
        return self.hull(self.point_on_arc(arc, s0), self.point_on_arc(arc, s1))

    # -- addresses and order ------------------------------------------
    def address(self, x: Point) -> Address:
        h = self.home(x)
        if h is None:
            return Address((), None, None)
        e, t = h
        return Address(self._addr[e], e, t)

    def order_key(self, x: Point) -> tuple[tuple[int, ...], Fraction]:
        h = self.home(x)
        if h is None:
            return ((), Fraction(0))
        e, t = h
        return (self._addr[e], t)

    def order_cmp(self, x: Point, y: Point) -> int:
        kx, ky = self.order_key(x), self.order_key(y)
        if kx == ky:
            return EQUAL
        return LESS if kx < ky else GREATER

    def precedes(self, x: Point, y: Point) -> bool:
        return self.order_key(x) < self.order_key(y)

    def sorted(self, points: Iterable[Point]) -> list[Point]:
        return sorted(points, key=self.order_key)

    # -- renumbering ---------------------------------------------------
    def renumbered(self, new_index: Mapping[str, int]) -> "Tree":
        index = dict(self.index)
        index.update(new_index)
        return build_tree(self.root, self.parent, index, self.length)


def build_tree(
    root: str,
    parent: Mapping[str, str],
    index: Mapping[str, int],
    length: Mapping[str, object],
) -> Tree:
    """Validate a tree description and precompute children, levels and addresses."""
    parent = dict(parent)
    if root in parent:
        raise TreeError("root cannot have a parent")
    if not parent:
        raise TreeError("a tree needs at least one edge")
    for v in parent:
        if v not in index:
            raise TreeError(f"vertex {v!r} has no branch index")
        if v not in length:
            raise TreeError(f"vertex {v!r} has no edge length")
    vertices = {root, *parent}
    for v, u in parent.items():
        if u not in vertices:
            raise TreeError(f"vertex {v!r} has unknown parent {u!r}")
    lengths = {}
    for v in parent:
        ln = as_fraction(length[v])
        if ln <= 0:
            raise TreeError(f"non-positive edge length at {v!r}")
        lengths[v] = ln
    level = {root: 0}
    for v in parent:
        seen = []
        u = v
        while u not in level:
            if u in seen:
                raise TreeError(f"cycle detected through {u!r}")
            seen.append(u)
            u = parent[u]
        for w in reversed(seen):
            level[w] = level[parent[w]] + 1
    kids: dict[str, list[str]] = {v: [] for v in vertices}
    for v, u in parent.items():
        kids[u].append(v)
    children = {}
    for v, cs in kids.items():
        idx = sorted(int(index[c]) for c in cs)
        if len(set(idx)) != len(idx):
            raise TreeError(f"duplicate branch indices at {v!r}")
        if idx != list(range(1, len(idx) + 1)):
            raise TreeError(f"gapped branch indices at {v!r}: {idx}")
        children[v] = tuple(sorted(cs, key=lambda c: index[c]))
    addr: dict[str, tuple[int, ...]] = {}
    for v in sorted(parent, key=level.__getitem__):
        u = parent[v]
        addr[v] = addr.get(u, ()) + (int(index[v]),)
    return Tree(
        root=root,
        parent=parent,
        index={v: int(index[v]) for v in parent},
        length=lengths,
        children=children,
        level=level,
        _addr=addr,
    )


def interval_tree(length=1, root: str = "0", end: str = "1") -> Tree:
    """The unit interval as a one-edge tree rooted at its left end."""
    return build_tree(root, {end: root}, {end: 1}, {end: length})


def star_tree(legs: int, center: str = "o", length=1) -> Tree:
    names = [chr(ord("a") + i) for i in range(legs)]
    return build_tree(
        center,
        {n: center for n in names},
        {n: i + 1 for i, n in enumerate(names)},
        {n: length for n in names},
    )


def f_adjust_numbering(tree: Tree, fmap, monotone: Mapping[tuple[str, str], bool] | None = None) -> Tree:
    """Renumber outgoing edges at fixed branchpoints so monotone edges come first.

    ``monotone`` optionally overrides the germ classification, keyed by
    ``(branchpoint, child edge)``; otherwise it is read off the map.
    """
    new_index: dict[str, int] = {}
    for y in sorted(tree.branchpoints):
        if fmap.eval(tree.vertex(y)) != tree.vertex(y):
            continue
        kids = tree.children[y]

        def is_mono(c: str) -> bool:
            if monotone is not None and (y, c) in monotone:
                return monotone[(y, c)]
            return fmap.germ_is_monotone(y, tree.index[c])

        ordered = [c for c in kids if is_mono(c)] + [c for c in kids if not is_mono(c)]
        for i, c in enumerate(ordered, start=1):
            new_index[c] = i
    return tree.renumbered(new_index)
