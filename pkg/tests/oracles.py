"""Independent reference computations used by the test-suite.

Each oracle recomputes a quantity from first principles, avoiding the
shortcut the library takes, so that agreement is meaningful.
"""

from __future__ import annotations

from fractions import Fraction

from treefold.tree import EQUAL, GREATER, LESS, Point, Tree


# -- order ---------------------------------------------------------------------
def walk_address(tree: Tree, x: Point):
    """Vertex path V(x) and branch indices, found by climbing parents."""
    if x.vertex == tree.root:
        return None, None
    if x.vertex is not None:
        last = tree.parent[x.vertex]
        tail = x.vertex
    else:
        last = tree.parent[x.edge]
        tail = x.edge
    chain = [tail]
    while chain[-1] != tree.root:
        chain.append(tree.parent[chain[-1]])
    chain.reverse()
    verts = chain[:-1]
    idx = tuple(tree.index[chain[j + 1]] for j in range(len(verts)))
    assert verts[-1] == last
    return verts, idx


def brute_order(tree: Tree, x: Point, y: Point) -> int:
    """The ordering rules applied one at a time."""
    if x == y:
        return EQUAL
    if x.vertex == tree.root:
        return LESS
    if y.vertex == tree.root:
        return GREATER
    vx, ax = walk_address(tree, x)
    vy, ay = walk_address(tree, y)
    if ax == ay:
        arc = tree.hull(tree.vertex(vx[-1]), y)
        return LESS if tree.arc_contains(arc, x) else GREATER
    k = min(len(ax), len(ay))
    if ax[:k] == ay[:k]:
        return LESS if len(ax) < len(ay) else GREATER
    j0 = next(j for j in range(k) if ax[j] != ay[j])
    return LESS if ax[j0] < ay[j0] else GREATER


def arc_length_by_vertices(tree: Tree, x: Point, y: Point) -> Fraction:
    """Distance via the lowest common ancestor of edge endpoints."""
    def anchor(p):
        if p.vertex is not None:
            return [(p.vertex, Fraction(0))]
        e, t = p.edge, p.t
        ln = tree.length[e]
        return [(tree.parent[e], t * ln), (e, (1 - t) * ln)]

    def vdist(u, v):
        pu, pv = tree.path_to_root(u), tree.path_to_root(v)
        common = next(w for w in pu if w in pv)
        d = Fraction(0)
        for path in (pu, pv):
            for w in path:
                if w == common:
                    break
                d += tree.length[w]
        return d

    if x.vertex is None and y.vertex is None and x.edge == y.edge:
        return abs(x.t - y.t) * tree.length[x.edge]
    return min(a + vdist(u, v) + b for u, a in anchor(x) for v, b in anchor(y))


# -- colored paths -----------------------------------------------------------------
def brute_color_words(graph, n):
    """Color words by listing every colored path, grouped by end vertex and path type."""
    V = graph.vertices
    succ = {i: [b for a, b in graph.edges if a == i] for i in V}
    words = set()
    by_end, mono_end, non_end = {}, {}, {}
    paths = [[(i, c)] for i in V for c in V[i].colors]
    for _ in range(n - 1):
        paths = [p + [(j, c)] for p in paths for j in succ[p[-1][0]] for c in V[j].colors]
    for p in paths:
        w = "".join(c for _, c in p)
        words.add(w)
        key = p[-1]
        by_end.setdefault(key, set()).add(w)
        if all(V[i].monotone for i, _ in p):
            mono_end.setdefault(key, set()).add(w)
        else:
            non_end.setdefault(key, set()).add(w)
    count = lambda d: {k: len(v) for k, v in d.items()}  # noqa: E731
    return len(words), count(by_end), count(mono_end), count(non_end), words


# -- stumps -------------------------------------------------------------------------
def brute_stumps(depth):
    """Stumps as parent-pointer lists (vertex 0 the root), by recursive growth of leaves."""
    found = set()

    def canon(children, v=0):
        return tuple(canon(children, c) for c in children.get(v, []))

    def grow(children, level, frontier):
        found.add(canon(children))
        for v in frontier:
            if level[v] >= depth or children.get(v):
                continue
            for k in (1, 2):
                new = dict(children)
                nxt = len(level)
                kids = list(range(nxt, nxt + k))
                new[v] = kids
                lv = dict(level)
                for c in kids:
                    lv[c] = level[v] + 1
                grow(new, lv, [f for f in frontier if f != v] + kids)

    grow({}, {0: 0}, [0])
    return found


def brute_cut_ends(stump, level):
    """Ends at ``level`` whose root path has a vertex with exactly one child."""
    count = 0

    def walk(node, depth, seen_cut):
        nonlocal count
        if not node:
            if depth == level and seen_cut:
                count += 1
            return
        for c in node:
            walk(c, depth + 1, seen_cut or len(node) == 1)

    walk(stump, 0, False)
    return count


# -- periodic points on [0, 1] ---------------------------------------------------------
def _compose_nodes(g, h):
    """Nodes of ``g o h`` for PL functions on [0, 1] given as sorted (x, y) lists."""
    gx = [x for x, _ in g]
    out = []
    for (x0, y0), (x1, y1) in zip(h, h[1:]):
        xs = {x0, x1}
        if y0 != y1:
            for c in gx:
                if min(y0, y1) < c < max(y0, y1):
                    xs.add(x0 + (c - y0) * (x1 - x0) / (y1 - y0))
        for x in sorted(xs):
            y = y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            out.append((x, _eval_nodes(g, y)))
    dedup = []
    for node in out:
        if not dedup or dedup[-1][0] != node[0]:
            dedup.append(node)
    return dedup


def _eval_nodes(nodes, x):
    for (x0, y0), (x1, y1) in zip(nodes, nodes[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    raise ValueError(x)


def brute_fixed_points(nodes, k):
    """Isolated solutions of f^k(x) = x and pointwise-fixed intervals, by node composition."""
    fk = list(nodes)
    for _ in range(k - 1):
        fk = _compose_nodes(nodes, fk)
    return _fixed_of_nodes(fk)


def brute_cylinder_counts(fmap, n_max):
    """Cylinders listed one by one: each carries the arc its image fills."""
    from fractions import Fraction

    tree = fmap.tree
    counts = [0] * n_max
    stack = [(1, p, Fraction(0), Fraction(1)) for p in fmap.all_pieces()]
    while stack:
        depth, p, s0, s1 = stack.pop()
        counts[depth - 1] += 1
        if depth == n_max or p.constant:
            continue
        image = tree.hull(tree.point_on_arc(p.arc, s0), tree.point_on_arc(p.arc, s1))
        for seg in image.segments:
            lo, hi = min(seg.start, seg.end), max(seg.start, seg.end)
            for q in fmap.pieces[seg.edge]:
                u, v = max(lo, q.t0), min(hi, q.t1)
                if u < v:
                    stack.append((depth + 1, q, (u - q.t0) / (q.t1 - q.t0), (v - q.t0) / (q.t1 - q.t0)))
    return counts


def _fixed_of_nodes(fk):
    pts, spans = set(), []
    for (x0, y0), (x1, y1) in zip(fk, fk[1:]):
        if y0 == x0 and y1 == x1:
            spans.append((x0, x1))
            continue
        slope = (y1 - y0) / (x1 - x0)
        if slope == 1:
            continue
        x = (y0 - slope * x0) / (1 - slope)
        if x0 <= x <= x1:
            pts.add(x)
    return pts, spans


def brute_periodic_by_period(nodes, k_max):
    """``{k: fixed points of f^k}`` for ``k <= k_max``, composing node lists once in gmpy2 rationals."""
    from fractions import Fraction

    from gmpy2 import mpq

    base = [(mpq(x), mpq(y)) for x, y in nodes]
    frac = lambda q: Fraction(int(q.numerator), int(q.denominator))  # noqa: E731
    out = {}
    fk = base
    for k in range(1, k_max + 1):
        if k > 1:
            fk = _compose_nodes(base, fk)
        pts, spans = _fixed_of_nodes(fk)
        out[k] = ({frac(x) for x in pts}, [(frac(a), frac(b)) for a, b in spans])
    return out
