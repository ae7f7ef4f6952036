"""Shift systems, itinerary sets and symbolic entropy estimates.

A shift system is ``m`` sampled closed sets ``H_1 .. H_m`` on a tree.  Set
membership is decided at a resolution ``eps`` (closed balls), so every
answer here is about the sampled sets, not their exact closures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .plmap import PLTreeMap
from .pointsets import PointSet
from .tree import Point, Tree, as_fraction

Word = tuple[int, ...]


class SymbolicError(ValueError):
    pass


class PreconditionError(SymbolicError):
    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message}: {witness}")
        self.witness = witness


@dataclass(eq=False)
class ShiftSystem:
    tree: Tree
    sets: tuple[PointSet, ...]
    eps: Fraction
    audit: dict = field(default_factory=dict)

    def __post_init__(self):
        self.eps = as_fraction(self.eps)
        for j, h in enumerate(self.sets, start=1):
            if h.is_empty:
                raise SymbolicError(f"H_{j} is empty")

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def union(self) -> PointSet:
        out = PointSet.empty(self.tree)
        for h in self.sets:
            out = out.union(h)
        return out

    def addresses(self, x: Point) -> frozenset[int]:
        return frozenset(j for j, h in enumerate(self.sets, start=1) if h.contains(x, self.eps))


def address_set(system: ShiftSystem, x: Point) -> tuple[frozenset[int], int]:
    """Letters whose set contains ``x``, and their number (the multiplicity)."""
    a = system.addresses(x)
    return a, len(a)


@dataclass(frozen=True)
class PointClass:
    in_kernel: bool
    in_center: bool
    in_core_approx: bool
    depth: int


def classify_point(system: ShiftSystem, fmap: PLTreeMap, x: Point, depth: int) -> PointClass:
    """Kernel and center membership, plus the depth-``depth`` core over-approximation."""
    if depth < 0:
        raise SymbolicError("depth must be non-negative")
    mult = len(system.addresses(x))
    core = mult == system.m
    y = x
    for _ in range(depth):
        if not core:
            break
        y = fmap.eval(y)
        core = len(system.addresses(y)) == system.m
    return PointClass(mult > 1, mult == system.m, core, depth)


def address_sequence(system: ShiftSystem, fmap: PLTreeMap, x: Point, n: int) -> list[frozenset[int]]:
    return [system.addresses(y) for y in fmap.orbit(x, n)]


def itinerary_count(system: ShiftSystem, fmap: PLTreeMap, x: Point, n: int) -> int:
    return math.prod(len(a) for a in address_sequence(system, fmap, x, n))


def itinerary_set(system: ShiftSystem, fmap: PLTreeMap, x: Point, n: int) -> set[Word]:
    """All words ``a_0 .. a_{n-1}`` with ``f^i(x)`` in ``H_{a_i}``."""
    if n < 1:
        raise SymbolicError("n must be at least 1")
    seq = address_sequence(system, fmap, x, n)
    return set(product(*[sorted(a) for a in seq]))


def check_word(w: Sequence[int], m: int) -> Word:
    w = tuple(int(a) for a in w)
    if any(a < 1 or a > m for a in w):
        raise SymbolicError(f"word {w} has letters outside 1..{m}")
    return w


def realizer_sample(system: ShiftSystem, fmap: PLTreeMap, w: Sequence[int], samples: Iterable[Point]) -> list[Point]:
    """Samples ``x`` with ``f^i(x)`` in ``H_{w_i}`` for every position ``i``."""
    w = check_word(w, system.m)
    out = []
    for x in samples:
        y = x
        ok = True
        for k, a in enumerate(w):
            if k:
                y = fmap.eval(y)
            if not system.sets[a - 1].contains(y, system.eps):
                ok = False
                break
        if ok:
            out.append(x)
    return out


# -- entropy from word counts ------------------------------------------------------
@dataclass(frozen=True)
class WordEntropy:
    counts: tuple[int, ...]
    per_n: tuple[float, ...]
    estimate: float
    nonincreasing: bool

    def as_dict(self) -> dict:
        return {
            "counts": list(self.counts),
            "per_n": list(self.per_n),
            "estimate": self.estimate,
            "nonincreasing": self.nonincreasing,
        }


def counts_entropy(counts: Sequence[int]) -> WordEntropy:
    """Entropy estimate from ``|W_1|, |W_2|, ...``.

    Besides ``log|W_n| / n`` the estimate uses the growth between ``n/2``
    and ``n``, which cancels the constant prefactor in ``|W_n| ~ C e^{hn}``.
    """
    counts = tuple(int(c) for c in counts)
    for k in range(len(counts) - 1):
        if counts[k] == 0 and counts[k + 1] > 0:
            raise SymbolicError(f"no words of length {k + 1} but some of length {k + 2}")
    per_n = tuple(math.log(c) / (k + 1) if c > 0 else 0.0 for k, c in enumerate(counts))
    n = len(counts)
    if n == 0 or counts[-1] == 0:
        est = 0.0
    elif n == 1:
        est = per_n[0]
    else:
        h = (n + 1) // 2
        est = (math.log(counts[n - 1]) - math.log(counts[h - 1])) / (n - h)
    nonincreasing = all(a >= b - 1e-12 for a, b in zip(per_n, per_n[1:]))
    return WordEntropy(counts, per_n, max(est, 0.0), nonincreasing)


def word_count_entropy(words_by_length: Sequence[Iterable[Word]]) -> WordEntropy:
    return counts_entropy([len(set(ws)) for ws in words_by_length])


def factor_closure(words: Iterable[Word], n_max: int) -> list[set[Word]]:
    """Length-``n`` factors (``n = 1..n_max``) of the given words."""
    out: list[set[Word]] = [set() for _ in range(n_max)]
    for w in set(words):
        L = len(w)
        for n in range(1, min(L, n_max) + 1):
            bucket = out[n - 1]
            for s in range(L - n + 1):
                bucket.add(w[s:s + n])
    return out


def shortlex_missing(words_by_length: Sequence[set[Word]], m: int, n_max: int) -> Word | None:
    """Shortlex-least word over ``1..m`` of length ``<= n_max`` not present."""
    for n in range(1, n_max + 1):
        have = words_by_length[n - 1] if n - 1 < len(words_by_length) else set()
        if len(have) == m ** n:
            continue
        for w in product(range(1, m + 1), repeat=n):
            if w not in have:
                return w
    return None


# -- local division -------------------------------------------------------------------
@dataclass(frozen=True)
class LocalDivisionCertificate:
    m: int
    eps: Fraction
    n_max: int
    words: tuple[frozenset[Word], ...]
    entropy: WordEntropy
    forbidden: Word | None
    preconditions: dict

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(w) for w in self.words)

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "eps": str(self.eps),
            "n_max": self.n_max,
            "counts": list(self.counts),
            "entropy": self.entropy.as_dict(),
            "forbidden": None if self.forbidden is None else "".join(map(str, self.forbidden)),
            "preconditions": self.preconditions,
        }


def local_division_check(
    system: ShiftSystem,
    fmap: PLTreeMap,
    W: PointSet,
    V: PointSet,
    n_max: int,
    samples: Iterable[Point],
    w_samples: int = 200,
) -> LocalDivisionCertificate:
    """Collect the itineraries of sampled orbit segments that stay in ``V \\ W``.

    Invariance of ``W`` and ``W ⊆ V`` are checked on samples of ``W`` and a
    failure raises :class:`PreconditionError` with the offending point.
    Whether every ``H_j`` leaves ``W`` is recorded, not enforced.
    """
    eps = system.eps
    wpts = W.sample(w_samples)
    for x in wpts:
        if not V.contains(x, eps):
            raise PreconditionError("W is not inside V", x)
    for x in wpts:
        fx = fmap.eval(x)
        if not W.contains(fx, eps):
            raise PreconditionError("f(W) is not inside W", x)
    outside = {}
    for j, h in enumerate(system.sets, start=1):
        outside[j] = any(not W.contains(p, 0) for p in h.sample(w_samples))
    observed: list[Word] = []
    for x in samples:
        seq = []
        y = x
        for _ in range(n_max):
            if W.contains(y, 0) or not V.contains(y, eps):
                break
            seq.append(sorted(system.addresses(y)))
            y = fmap.eval(y)
        while seq and not seq[-1]:
            seq.pop()
        if seq and all(seq):
            observed.extend(product(*seq))
    words = factor_closure(observed, n_max)
    ent = word_count_entropy(words)
    forbidden = shortlex_missing(words, system.m, n_max)
    pre = {
        "invariant_on_samples": True,
        "inside_V_on_samples": True,
        "H_minus_W_nonempty": outside,
        "all_H_leave_W": all(outside.values()),
    }
    return LocalDivisionCertificate(
        system.m, eps, n_max, tuple(frozenset(w) for w in words), ent, forbidden, pre
    )


@dataclass(frozen=True)
class MergedCertificate:
    word: Word | None
    letter: int | None
    words: tuple[frozenset[Word], ...]
    omits_word: bool
    entropy: WordEntropy


def merge_certificates(certs: Sequence[LocalDivisionCertificate]) -> MergedCertificate:
    """Combine certificates for several dividing sets.

    Pick a word ``w`` absent from every certificate and a letter ``i``
    different from the last letter of ``w``; the merged language consists
    of the factors of ``alpha i i i ...`` over observed words ``alpha``,
    together with the constant word ``i i i ...``.
    """
    if not certs:
        raise SymbolicError("nothing to merge")
    m = certs[0].m
    n_max = min(c.n_max for c in certs)
    union = [set().union(*(c.words[n] for c in certs)) for n in range(n_max)]
    w = shortlex_missing(union, m, n_max)
    if w is None:
        return MergedCertificate(None, None, tuple(frozenset(u) for u in union), False, word_count_entropy(union))
    i = next(a for a in range(1, m + 1) if a != w[-1])
    padded = [alpha + (i,) * n_max for n in range(n_max) for alpha in union[n]]
    padded.append((i,) * n_max)
    merged = factor_closure(padded, n_max)
    omits = w not in merged[len(w) - 1]
    return MergedCertificate(w, i, tuple(frozenset(s) for s in merged), omits, word_count_entropy(merged))


# -- virtual entropy -----------------------------------------------------------------
def virtual_entropy_periodic(system: ShiftSystem, fmap: PLTreeMap, orbit: Sequence[Point], n_max: int) -> WordEntropy:
    """Word-count entropy of the union of the itinerary sets of an orbit."""
    N = len(orbit)
    for k, x in enumerate(orbit):
        if fmap.eval(x) != orbit[(k + 1) % N]:
            raise SymbolicError(f"orbit is not periodic at position {k}: f({x}) = {fmap.eval(x)}")
    addr = [sorted(system.addresses(x)) for x in orbit]
    words_by_length = []
    for n in range(1, n_max + 1):
        ws: set[Word] = set()
        for k in range(N):
            ws.update(product(*[addr[(k + i) % N] for i in range(n)]))
        words_by_length.append(ws)
    return word_count_entropy(words_by_length)


# -- Markov partition and lap itineraries -------------------------------------------------
def partition_word_counts(fmap: PLTreeMap, n_max: int) -> list[int]:
    """Number of admissible length-``n`` piece sequences in the Markov graph."""
    from .plmap import incidence_matrix

    mat = incidence_matrix(fmap).entries
    k = len(mat)
    vec = [1] * k
    out = [k]
    for _ in range(n_max - 1):
        vec = [sum(mat[i][j] * vec[j] for j in range(k)) for i in range(k)]
        out.append(sum(vec))
    return out


def lap_itinerary_counts(fmap: PLTreeMap, n_max: int, limit: int = 200_000) -> list[int]:
    """Number of nonempty piece-itinerary cylinders of each length (no Markov assumption).

    A cylinder is tracked by its last piece and the sub-arc of that piece it
    fills; cylinders sharing both have the same continuations, so they are
    merged and carried with a multiplicity.  ``limit`` caps the number of
    distinct states per length.
    """
    tree = fmap.tree
    pieces = fmap.all_pieces()
    by_edge: dict[str, list[int]] = {}
    for k, q in enumerate(pieces):
        by_edge.setdefault(q.edge, []).append(k)
    counts: list[int] = []
    layer: dict[tuple[int, Fraction, Fraction], int] = {(k, Fraction(0), Fraction(1)): 1 for k in range(len(pieces))}
    succ_cache: dict[tuple[int, Fraction, Fraction], list[tuple[int, Fraction, Fraction]]] = {}
    for depth in range(1, n_max + 1):
        counts.append(sum(layer.values()))
        if depth == n_max:
            break
        nxt: dict[tuple[int, Fraction, Fraction], int] = {}
        for state, mult in layer.items():
            succ = succ_cache.get(state)
            if succ is None:
                succ = succ_cache[state] = _cylinder_successors(tree, fmap, pieces, by_edge, state)
            for s in succ:
                nxt[s] = nxt.get(s, 0) + mult
        if len(nxt) > limit:
            raise SymbolicError("cylinder enumeration limit exceeded")
        layer = nxt
    return counts


def _cylinder_successors(tree, fmap, pieces, by_edge, state):
    k, s0, s1 = state
    p = pieces[k]
    if p.constant:
        return []
    image = tree.hull(tree.point_on_arc(p.arc, s0), tree.point_on_arc(p.arc, s1))
    out = []
    for seg in image.segments:
        lo, hi = min(seg.start, seg.end), max(seg.start, seg.end)
        for j in by_edge.get(seg.edge, []):
            q = pieces[j]
            u, v = max(lo, q.t0), min(hi, q.t1)
            if u < v:
                out.append((j, (u - q.t0) / (q.t1 - q.t0), (v - q.t0) / (q.t1 - q.t0)))
    return out
