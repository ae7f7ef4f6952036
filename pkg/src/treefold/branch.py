"""Branch graphs at a fixed branchpoint, colored-path counting and stumps.

Colors are the strings ``"1"`` and ``"m"`` (membership in the first or
last shift set).  A colored path is a walk in the branch graph together
with an allowed color at every step; its color word is the string of
those colors.  Counting distinct color words is done by a subset
construction over colored vertices, so the cost depends on the number of
reachable subsets rather than on the number of paths.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .pointsets import Interval, PointSet
from .tree import Point, as_fraction

COLORS = ("1", "m")


class BranchGraphError(ValueError):
    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = violations or []


@dataclass(frozen=True)
class BranchVertex:
    index: int
    monotone: bool
    colors: frozenset[str]

    @property
    def monochrome(self) -> bool:
        return len(self.colors) == 1


@dataclass(frozen=True)
class BranchGraph:
    vertices: Mapping[int, BranchVertex]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def make(cls, rows: Iterable[tuple[int, bool, str]], edges: Iterable[tuple[int, int]]) -> "BranchGraph":
        """Build from ``(index, monotone, colors)`` rows, colors given as e.g. ``"1m"``."""
        verts = {}
        for i, mono, cols in rows:
            cs = frozenset(c for c in cols if c in COLORS)
            verts[int(i)] = BranchVertex(int(i), bool(mono), cs)
        return cls(verts, frozenset((int(a), int(b)) for a, b in edges))

    @property
    def ell(self) -> int:
        return len(self.vertices)

    def successors(self, i: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == i)

    def predecessors(self, i: int) -> list[int]:
        return sorted(a for a, b in self.edges if b == i)

    def monotone_loops(self) -> list[tuple[int, ...]]:
        """Cycles through monotone vertices only (each vertex there has at most one successor)."""
        loops = []
        seen = set()
        for start in sorted(self.vertices):
            if start in seen or not self.vertices[start].monotone:
                continue
            path = [start]
            pos = {start: 0}
            cur = start
            while True:
                nxt = [s for s in self.successors(cur) if self.vertices[s].monotone]
                if not nxt:
                    break
                cur = nxt[0]
                if cur in pos:
                    cyc = tuple(path[pos[cur]:])
                    key = frozenset(cyc)
                    if key not in seen:
                        loops.append(cyc)
                    seen.update(cyc)
                    break
                pos[cur] = len(path)
                path.append(cur)
        uniq = {}
        for c in loops:
            k = min(range(len(c)), key=lambda r: c[r:] + c[:r])
            uniq[c[k:] + c[:k]] = True
        return list(uniq)

    @property
    def q(self) -> int:
        return max((len(c) for c in self.monotone_loops()), default=0)

    def as_dict(self) -> dict:
        return {
            "vertices": [
                {"index": v.index, "monotone": v.monotone, "colors": sorted(v.colors)}
                for v in sorted(self.vertices.values(), key=lambda v: v.index)
            ],
            "edges": sorted([list(e) for e in self.edges]),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BranchGraph":
        rows = [(v["index"], v["monotone"], "".join(v["colors"])) for v in data["vertices"]]
        return cls.make(rows, [tuple(e) for e in data["edges"]])


@dataclass(frozen=True)
class Violation:
    rule: str
    vertices: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.rule}: {list(self.vertices)}"


def validate_branch_graph(graph: BranchGraph) -> list[Violation]:
    out: list[Violation] = []
    V = graph.vertices
    for a, b in graph.edges:
        if a not in V or b not in V:
            out.append(Violation("edge between unknown vertices", (a, b)))
    if out:
        return out
    for i, v in sorted(V.items()):
        if not v.colors:
            out.append(Violation("inactive vertex (no color)", (i,)))
        preds = graph.predecessors(i)
        if len(preds) > 2:
            out.append(Violation("indegree above 2", (i, *preds)))
        if v.monotone and len(graph.successors(i)) > 1:
            out.append(Violation("monotone vertex with outdegree above 1", (i, *graph.successors(i))))
        if len(preds) == 2:
            a, b = (V[p] for p in preds)
            if not (a.monotone and b.monotone and a.monochrome and b.monochrome and a.colors != b.colors):
                out.append(Violation("two predecessors not monotone monochrome of distinct colors", (i, *preds)))
        if not v.monotone:
            want = frozenset({"m"}) if i == 0 else frozenset({"1"})
            if v.colors != want:
                out.append(Violation("nonmonotone vertex with wrong colors", (i,)))
    for loop in graph.monotone_loops():
        if not any(V[i].monochrome for i in loop):
            out.append(Violation("monotone loop without monochrome vertex", loop))
    return out


# -- counting ----------------------------------------------------------------------
class _Automaton:
    """Subset automaton over colored vertices, optionally with a visited-nonmonotone flag."""

    def __init__(self, graph: BranchGraph, monotone_only: bool = False, flag: bool = False):
        self.graph = graph
        states = []
        for i in sorted(graph.vertices):
            v = graph.vertices[i]
            if monotone_only and not v.monotone:
                continue
            for c in sorted(v.colors):
                for fl in ((False, True) if flag else (False,)):
                    states.append((i, c, fl))
        self.states = states
        self.bit = {s: 1 << k for k, s in enumerate(states)}
        self.flag = flag
        self.start = {}
        for c in COLORS:
            mask = 0
            for (i, cc, fl) in states:
                if cc == c and fl == (flag and not graph.vertices[i].monotone):
                    mask |= self.bit[(i, cc, fl)]
            self.start[c] = mask
        self.step_bit: dict[tuple[int, str], int] = {}
        for s in states:
            i, _, fl = s
            for c in COLORS:
                mask = 0
                for j in graph.successors(i):
                    if (j, c, False) in self.bit or (j, c, True) in self.bit:
                        nfl = fl or (flag and not graph.vertices[j].monotone)
                        t = (j, c, nfl)
                        if t in self.bit:
                            mask |= self.bit[t]
                self.step_bit[(self.bit[s], c)] = mask
        self._memo: dict[tuple[int, str], int] = {}

    def step(self, mask: int, c: str) -> int:
        key = (mask, c)
        out = self._memo.get(key)
        if out is None:
            out = 0
            m = mask
            while m:
                low = m & -m
                out |= self.step_bit[(low, c)]
                m ^= low
            self._memo[key] = out
        return out

    def layers(self, n_max: int) -> list[dict[int, int]]:
        """For each length ``n``, a map from reachable subset to number of words reaching it."""
        cur: dict[int, int] = {}
        for c in COLORS:
            if self.start[c]:
                cur[self.start[c]] = cur.get(self.start[c], 0) + 1
        out = [cur]
        for _ in range(n_max - 1):
            nxt: dict[int, int] = {}
            for mask, k in cur.items():
                for c in COLORS:
                    t = self.step(mask, c)
                    if t:
                        nxt[t] = nxt.get(t, 0) + k
            out.append(nxt)
            cur = nxt
        return out

    def per_state(self, layer: dict[int, int], want) -> dict[tuple[int, str], int]:
        res: dict[tuple[int, str], int] = {}
        for s, b in self.bit.items():
            if not want(s):
                continue
            key = (s[0], s[1])
            res[key] = res.get(key, 0) + sum(k for mask, k in layer.items() if mask & b)
        return res


@dataclass(frozen=True)
class ColorCounts:
    n: int
    N: int
    P: Mapping[tuple[int, str], int]
    M: Mapping[tuple[int, str], int]
    S: Mapping[tuple[int, str], int]


def color_count_table(graph: BranchGraph, n_max: int) -> list[ColorCounts]:
    """Counts for every length ``1..n_max``.

    ``P[(b, c)]`` counts color words of colored paths ending at ``(b, c)``;
    ``M`` restricts to monotone branch paths and ``S`` to branch paths
    visiting a nonmonotone germ.
    """
    full = _Automaton(graph)
    mono = _Automaton(graph, monotone_only=True)
    flagged = _Automaton(graph, flag=True)
    lf, lm, ls = full.layers(n_max), mono.layers(n_max), flagged.layers(n_max)
    keys = [(i, c) for i in sorted(graph.vertices) for c in sorted(graph.vertices[i].colors)]
    out = []
    for n in range(n_max):
        N = sum(lf[n].values())
        P = full.per_state(lf[n], lambda s: True)
        M = mono.per_state(lm[n], lambda s: True)
        S_ = {}
        for key in keys:
            b = flagged.bit.get((key[0], key[1], True))
            S_[key] = sum(k for mask, k in ls[n].items() if b and mask & b)
        out.append(
            ColorCounts(
                n + 1,
                N,
                {k: P.get(k, 0) for k in keys},
                {k: M.get(k, 0) for k in keys},
                S_,
            )
        )
    return out


def count_color_words(graph: BranchGraph, n: int) -> ColorCounts:
    if n < 1:
        raise BranchGraphError("n must be at least 1")
    return color_count_table(graph, n)[-1]


def colored_paths(graph: BranchGraph, n: int) -> Iterable[tuple[tuple[int, str], ...]]:
    """Every colored path with ``n`` vertices (exhaustive; small ``n`` only)."""
    V = graph.vertices
    succ = {i: graph.successors(i) for i in V}

    def extend(path):
        if len(path) == n:
            yield tuple(path)
            return
        last = path[-1][0]
        for j in succ[last]:
            for c in sorted(V[j].colors):
                path.append((j, c))
                yield from extend(path)
                path.pop()

    for i in sorted(V):
        for c in sorted(V[i].colors):
            yield from extend([(i, c)])


def find_forbidden_word(graph: BranchGraph, n_max: int) -> str | None:
    """Shortlex-least color word (``"1" < "m"``) of length ``<= n_max`` no colored path carries."""
    auto = _Automaton(graph)
    queue = deque()
    for c in COLORS:
        if not auto.start[c]:
            return c
        queue.append((c, auto.start[c]))
    seen = {}
    while queue:
        word, mask = queue.popleft()
        if len(word) >= n_max:
            continue
        for c in COLORS:
            t = auto.step(mask, c)
            if not t:
                return word + c
            key = (t, len(word) + 1)
            if key in seen:
                continue
            seen[key] = True
            queue.append((word + c, t))
    return None


# -- bounds -------------------------------------------------------------------------
def closed_form_p(ell: int) -> int:
    """Least ``p`` with ``ell * (1 + 6p) < 2**p``."""
    p = 0
    while not ell * (1 + 6 * p) < 2 ** p:
        p += 1
    return p


def p_bound(ell: int, p: int) -> int:
    return 2 ** (p * (ell - 1)) * (1 + 6 * p)


def m_bound(ell: int, p: int) -> int:
    return 2 ** (p * (ell - 1)) * 6


@dataclass(frozen=True)
class BoundReport:
    ell: int
    q: int
    p_max: int
    rows: tuple[dict, ...]
    violations: tuple[dict, ...]
    first_short_n: int | None
    sufficient_p: int

    def as_dict(self) -> dict:
        return {
            "ell": self.ell,
            "q": self.q,
            "p_max": self.p_max,
            "rows": list(self.rows),
            "violations": list(self.violations),
            "first_n_with_N_below_2n": self.first_short_n,
            "closed_form_p": self.sufficient_p,
        }


def verify_counting_bounds(graph: BranchGraph, p_max: int = 3, search_p: int | None = None) -> BoundReport:
    """Exact ``P`` and ``M`` counts at lengths ``p*ell + 1`` against their bounds.

    Also finds the least length of the form ``p*ell + 1`` (``p <= search_p``)
    with fewer than ``2**n`` color words.
    """
    ell = graph.ell
    suff = closed_form_p(ell) if ell else 0
    search_p = suff if search_p is None else search_p
    n_top = max(p_max, search_p) * ell + 1
    table = color_count_table(graph, max(n_top, 1))
    rows, viol = [], []
    for p in range(p_max + 1):
        n = p * ell + 1
        cc = table[n - 1]
        pb, mb = p_bound(ell, p), m_bound(ell, p)
        rows.append(
            {
                "p": p,
                "n": n,
                "N": cc.N,
                "P_max": max(cc.P.values(), default=0),
                "M_max": max(cc.M.values(), default=0),
                "S_max": max(cc.S.values(), default=0),
                "P_bound": pb,
                "M_bound": mb,
            }
        )
        for key, val in cc.P.items():
            if val > pb:
                viol.append({"kind": "P", "p": p, "vertex": list(key), "value": val, "bound": pb})
        for key, val in cc.M.items():
            if val > mb:
                viol.append({"kind": "M", "p": p, "vertex": list(key), "value": val, "bound": mb})
    first = None
    for p in range(search_p + 1):
        n = p * ell + 1
        if table[n - 1].N < 2 ** n:
            first = n
            break
    return BoundReport(ell, graph.q, p_max, tuple(rows), tuple(viol), first, suff)


# -- random graphs ---------------------------------------------------------------------
def random_branch_graph(rng: random.Random, ell: int, edge_prob: float = 0.5) -> BranchGraph:
    """A graph obeying every validator rule, grown edge by edge."""
    use_zero = rng.random() < 0.5
    idx = list(range(0 if use_zero else 1, ell + (0 if use_zero else 1)))
    rows = []
    for i in idx:
        mono = rng.random() < 0.7
        if mono:
            cols = rng.choice(["1", "m", "1m", "1m"])
        else:
            cols = "m" if i == 0 else "1"
        rows.append((i, mono, cols))
    g = BranchGraph.make(rows, [])
    cands = [(a, b) for a in idx for b in idx]
    rng.shuffle(cands)
    edges: set[tuple[int, int]] = set()
    for e in cands:
        if rng.random() > edge_prob:
            continue
        trial = BranchGraph(g.vertices, frozenset(edges | {e}))
        if not validate_branch_graph(trial):
            edges.add(e)
    return BranchGraph(g.vertices, frozenset(edges))


def random_graphs(count: int, max_ell: int = 4, seed: int = 0) -> list[BranchGraph]:
    rng = random.Random(seed)
    return [random_branch_graph(rng, rng.randint(1, max_ell), rng.choice([0.3, 0.5, 0.8])) for _ in range(count)]


def has_monochrome_constraint(graph: BranchGraph) -> bool:
    return any(v.monochrome for v in graph.vertices.values())


# -- graphs from maps ---------------------------------------------------------------------
def build_branch_graph(fmap, system, y: str, radius, samples: int = 64) -> BranchGraph:
    """Branch graph at the fixed branchpoint ``y`` from sampled germs of radius ``radius``.

    Colors come from the first and last shift sets; a germ whose first
    piece is constant is inactive.  Monotonicity is read from the map.
    """
    tree = fmap.tree
    radius = as_fraction(radius)
    if y not in tree.branchpoints:
        raise BranchGraphError(f"{y!r} is not a branchpoint")
    yp = tree.vertex(y)
    if fmap.eval(yp) != yp:
        raise BranchGraphError(f"{y!r} is not fixed")
    germs = {}
    for e, t in tree.incident_edges(y):
        if radius >= tree.length[e]:
            raise BranchGraphError(f"radius too large: edge {e!r} has length {tree.length[e]}")
        germs[tree.branch_of_edge(y, e)] = (e, t)
    H1, Hm = system.sets[0], system.sets[-1]
    eps = system.eps

    def germ_span(i):
        e, t = germs[i]
        r = radius / tree.length[e]
        return (e, Fraction(0), r) if t == 0 else (e, 1 - r, Fraction(1))

    def restrict(S: PointSet, i) -> PointSet:
        """Part of ``S`` inside the germ of branch ``i``, with ``y`` itself left out."""
        e, lo, hi = germ_span(i)
        pts = [x for x in S.points if x != yp and x.vertex is None and x.edge == e and lo <= x.t <= hi]
        ivs = []
        for iv in S.intervals:
            if iv.edge != e:
                continue
            a, b = max(iv.lo, lo), min(iv.hi, hi)
            if a < b or (a == b and a not in (0, 1)):
                ivs.append(Interval(e, a, b))
            elif a == b and tree.point(e, a) != yp:
                pts.append(tree.point(e, a))
        return PointSet(tree, tuple(pts), tuple(ivs))

    def which_germ(x: Point) -> int | None:
        if x.vertex is not None or tree.distance(x, yp) >= radius:
            return None
        e = x.edge
        if y not in tree.edge_ends(e):
            return None
        return tree.branch_of_edge(y, e)

    rows = []
    parts: dict[int, dict[str, PointSet]] = {}
    for i, (e, t) in sorted(germs.items()):
        if fmap.germ_piece(y, e).constant:
            continue
        cols = {c: restrict(S, i) for c, S in (("1", H1), ("m", Hm))}
        colors = "".join(c for c in COLORS if not cols[c].is_empty)
        if not colors:
            continue
        parts[i] = cols
        rows.append((i, fmap.germ_is_monotone(y, i), colors))
    edges = set()
    for i, cols in parts.items():
        for S in cols.values():
            if S.is_empty:
                continue
            for x in S.sample(samples):
                j = which_germ(fmap.eval(x))
                if j is None or j not in parts:
                    continue
                if any(not T.is_empty and T.contains(fmap.eval(x), eps) for T in parts[j].values()):
                    edges.add((i, j))
    g = BranchGraph.make(rows, edges)
    bad = validate_branch_graph(g)
    if bad:
        raise BranchGraphError("branch graph violates the structural rules", bad)
    return g


# -- stumps -------------------------------------------------------------------------------
Stump = tuple  # a vertex is the tuple of its children (0, 1 or 2 of them)

MAX_STUMP_DEPTH = 4


def stumps(depth: int) -> list[Stump]:
    """All stumps of height at most ``depth``, children ordered."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth > MAX_STUMP_DEPTH:
        raise ValueError(
            f"exhaustive enumeration stops at depth {MAX_STUMP_DEPTH}; depth {depth} has about "
            f"{stump_count(depth):.3g} stumps"
        )
    level = [()]
    for _ in range(depth):
        level = [()] + [(c,) for c in level] + [(a, b) for a in level for b in level]
    return level


def stump_count(depth: int) -> int:
    t = 1
    for _ in range(depth):
        t = 1 + t + t * t
    return t


def stump_vertices(stump: Stump) -> list[tuple[tuple[int, ...], Stump]]:
    """(path, subtree) for every vertex; a path lists child positions from the root."""
    out = []
    stack = [((), stump)]
    while stack:
        path, node = stack.pop()
        out.append((path, node))
        for k, c in enumerate(node):
            stack.append((path + (k,), c))
    return out


def _node_at(stump: Stump, path: Sequence[int]) -> Stump:
    node = stump
    for k in path:
        node = node[k]
    return node


def edge_bits(stump: Stump, path: Sequence[int]) -> tuple[int, ...]:
    """Bits along ``path``: a lone child gets 0, the two children of a binary vertex get 0 and 1."""
    node = stump
    bits = []
    for k in path:
        bits.append(0 if len(node) == 1 else k)
        node = node[k]
    return tuple(bits)


def cut_ends(stump: Stump, level: int | None = None) -> list[tuple[int, ...]]:
    out = []
    for path, node in stump_vertices(stump):
        if node or not path:
            continue
        if level is not None and len(path) != level:
            continue
        chain = [_node_at(stump, path[:k]) for k in range(len(path))]
        if any(len(v) == 1 for v in chain):
            out.append(path)
    return sorted(out)


def cut_end_injection(stump: Stump, end: Sequence[int]) -> tuple[int, ...]:
    """End address with the bit leaving the first cutpoint on the root path flipped to 1."""
    end = tuple(end)
    node = _node_at(stump, end)
    if node:
        raise ValueError(f"{end} is not an end")
    bits = list(edge_bits(stump, end))
    for k in range(len(end)):
        if len(_node_at(stump, end[:k])) == 1:
            bits[k] = 1
            return tuple(bits)
    raise ValueError(f"{end} is not a cut end: no cutpoint on its root path")


@dataclass(frozen=True)
class StumpAudit:
    depth: int
    stumps: int
    max_cut_ends: Mapping[int, int]
    maximizers: Mapping[int, Stump]
    bound_violations: int
    injection_failures: int

    @property
    def passes(self) -> bool:
        return self.bound_violations == 0 and self.injection_failures == 0

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "stumps": self.stumps,
            "max_cut_ends": {str(k): v for k, v in self.max_cut_ends.items()},
            "bounds": {str(k): 2 ** (k - 1) for k in self.max_cut_ends},
            "maximizers": {str(k): repr(v) for k, v in self.maximizers.items()},
            "bound_violations": self.bound_violations,
            "injection_failures": self.injection_failures,
        }


def injection_ok(stump: Stump, level: int) -> bool:
    ends = cut_ends(stump, level)
    realized = {edge_bits(stump, p) for p, _ in stump_vertices(stump) if len(p) == level}
    images = [cut_end_injection(stump, e) for e in ends]
    return len(set(images)) == len(images) and not (set(images) & realized)


def stump_cut_end_audit(depth: int) -> StumpAudit:
    best: dict[int, int] = {lvl: 0 for lvl in range(1, depth + 1)}
    arg: dict[int, Stump] = {lvl: () for lvl in range(1, depth + 1)}
    bound_bad = inj_bad = 0
    all_stumps = stumps(depth)
    for s in all_stumps:
        ends = cut_ends(s)
        by_level: dict[int, int] = {}
        for e in ends:
            by_level[len(e)] = by_level.get(len(e), 0) + 1
        for lvl, k in by_level.items():
            if k > best[lvl]:
                best[lvl], arg[lvl] = k, s
            if k > 2 ** (lvl - 1):
                bound_bad += 1
            if not injection_ok(s, lvl):
                inj_bad += 1
    return StumpAudit(depth, len(all_stumps), best, arg, bound_bad, inj_bad)


def path_stump(length: int) -> Stump:
    s: Stump = ()
    for _ in range(length):
        s = (s,)
    return s


def full_binary_stump(depth: int) -> Stump:
    s: Stump = ()
    for _ in range(depth):
        s = (s, s)
    return s
