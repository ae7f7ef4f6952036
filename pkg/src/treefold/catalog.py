"""Named example maps, the flattened-tent family and an end-to-end verdict.

The flattened tent ``g`` rises on ``[0, 1/3]``, stays at 1 on the middle
third and falls on ``[2/3, 1]``.  Its family is obtained by replacing ``g``
on the nested preimages of the middle third with zigzags, one level at a
time.  Only finitely many levels can be stored, so every member carries a
note saying at which depth the construction was truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

from .io import FormatError, load_map, map_to_dict, save_map, tree_to_dict
from .plmap import (
    MapError,
    PLTreeMap,
    flat_tent_map,
    grid_points,
    identity_map,
    incidence_matrix,
    interval_map,
    mfold_report,
    sawtooth_map,
    spectral_enclosure,
    tent_map,
    three_star_map,
)
from .shift import counts_entropy, lap_itinerary_counts
from .tree import Point, interval_tree

THIRD = Fraction(1, 3)
MARKOV_TOL = 1e-9
WORDS_TOL = 0.05
WORDS_N = 14


# -- the flattened-tent family ---------------------------------------------------------
def _g(x: Fraction) -> Fraction:
    if x <= THIRD:
        return 3 * x
    if x <= 1 - THIRD:
        return Fraction(1)
    return 3 * (1 - x)


def modified_intervals(depth: int) -> dict[int, list[tuple[Fraction, Fraction]]]:
    """Level ``k`` intervals, ``1 <= k <= depth``: ``g^k`` maps each onto the middle third."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    levels: dict[int, list[tuple[Fraction, Fraction]]] = {}
    prev = [(THIRD, 1 - THIRD)]
    for k in range(1, depth + 1):
        cur = []
        for a, b in prev:
            cur.append((a / 3, b / 3))
            cur.append((1 - b / 3, 1 - a / 3))
        levels[k] = sorted(cur)
        prev = cur
    return levels


def zigzag_laps(m: int) -> int:
    """Laps per modified interval: ``m`` when odd, ``m + 1`` when even (the ends must match ``g``)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return m if m % 2 else m + 1


def depth_note(depth: int) -> str:
    return (
        f"approximation at depth {depth}: levels 1..{depth} are zigzagged, deeper preimages of the "
        "middle third keep g, so the uncountable exceptional set of the infinite construction is not represented"
    )


def prop12_map(m: int, depth: int) -> PLTreeMap:
    """``g`` with every level-``k`` interval (``k <= depth``) replaced by a zigzag onto its ``g``-image."""
    laps = zigzag_laps(m)
    nodes = {Fraction(0): Fraction(0), THIRD: Fraction(1), 1 - THIRD: Fraction(1), Fraction(1): Fraction(0)}
    for ivs in modified_intervals(depth).values():
        for a, b in ivs:
            ga, gb = _g(a), _g(b)
            for i in range(laps + 1):
                nodes[a + (b - a) * i / laps] = ga if i % 2 == 0 else gb
    name = "g" if depth == 0 else f"prop12_m{m}_d{depth}"
    return interval_map(sorted(nodes.items()), name=name)


def interval_points(fmap: PLTreeMap, ivs, resolution: Fraction) -> list[Point]:
    """Grid points of ``[0, 1]`` that fall strictly inside one of ``ivs``."""
    e = fmap.tree.edges[0]
    k = math.ceil(1 / resolution)
    out = []
    for i in range(1, k):
        t = Fraction(i, k)
        if any(a < t < b for a, b in ivs):
            out.append(fmap.tree.point(e, t))
    return out


# -- catalog ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CatalogEntry:
    name: str
    tree_file: str
    map_file: str
    m: int
    entropy: str | None
    note: str
    builder: Callable[[], PLTreeMap] | None = field(default=None, compare=False, repr=False)
    m_on_Y: int | None = None
    depth: int | None = None

    @property
    def declared_entropy(self) -> float | None:
        if self.entropy is None:
            return None
        if self.entropy == "0":
            return 0.0
        return math.log(float(Fraction(self.entropy.split()[1])))

    def load(self) -> PLTreeMap:
        """Parse the shipped files (``FormatError``/``MapError`` if they are invalid)."""
        with resources.as_file(resources.files(__package__) / "data") as root:
            return load_map(Path(root) / self.tree_file, Path(root) / self.map_file)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "tree_file": self.tree_file,
            "map_file": self.map_file,
            "m": self.m,
            "entropy": self.entropy,
            "m_on_Y": self.m_on_Y,
            "note": self.note,
        }


def _entry(name, tree_file, m, entropy, note, builder=None, **kw) -> CatalogEntry:
    return CatalogEntry(name, tree_file, f"{name}_map.json", m, entropy, note, builder, **kw)


def catalog() -> list[CatalogEntry]:
    out = [_entry("tent", "interval_tree.json", 2, "log 2", "full tent map", tent_map)]
    for m in range(2, 6):
        out.append(_entry(f"sawtooth{m}", "interval_tree.json", m, f"log {m}", f"{m} full laps", lambda m=m: sawtooth_map(m)))
    out.append(_entry("g", "interval_tree.json", 2, "log 2", "flattened tent, constant on the middle third", flat_tent_map))
    for m in (2, 3):
        out.append(
            _entry(
                f"prop12_m{m}_d2",
                "interval_tree.json",
                2,
                "log 2",
                f"g zigzagged with {zigzag_laps(m)} laps on wandering intervals; globally 2-fold, "
                f"{m}-fold on the images of the modified intervals; " + depth_note(2),
                lambda m=m: prop12_map(m, 2),
                m_on_Y=m,
                depth=2,
            )
        )
    out.append(
        _entry(
            "star3",
            "star3_tree.json",
            3,
            "log 3",
            "3-star Markov map; each leg folds across the other two, incidence on the three legs is all ones",
        )
    )
    out.append(_entry("identity", "interval_tree.json", 2, "0", "homeomorphism, negative control", lambda: identity_map(interval_tree())))
    return out


def get_entry(name: str) -> CatalogEntry:
    for e in catalog():
        if e.name == name:
            return e
    raise KeyError(f"no catalog entry {name!r}; known: {', '.join(e.name for e in catalog())}")


def export_catalog(directory) -> list[Path]:
    """Write every built-in map to ``directory``; the 3-star files come from ``three_star_map``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for e in catalog():
        fmap = e.builder() if e.builder else three_star_map()
        save_map(fmap, directory / e.tree_file, directory / e.map_file)
        written += [directory / e.tree_file, directory / e.map_file]
    return written


def entry_matches_builder(entry: CatalogEntry) -> bool:
    """Shipped files reproduce the constructor exactly."""
    if entry.builder is None:
        return True
    fmap, ref = entry.load(), entry.builder()
    return tree_to_dict(fmap.tree) == tree_to_dict(ref.tree) and map_to_dict(fmap)["breaks"] == map_to_dict(ref)["breaks"]


# -- entropy and verdicts ------------------------------------------------------------------
@dataclass(frozen=True)
class EntropyResult:
    method: str
    value: float
    lower: float
    upper: float
    tolerance: float

    def as_dict(self) -> dict:
        return dict(method=self.method, value=self.value, lower=self.lower, upper=self.upper, tolerance=self.tolerance)


def map_entropy(fmap: PLTreeMap, method: str = "auto", n: int = WORDS_N) -> EntropyResult:
    """Markov matrix enclosure when the map is Markov, else the lap-itinerary word-count estimate."""
    if method not in ("auto", "matrix", "words"):
        raise ValueError(f"unknown entropy method {method!r}")
    if method == "matrix" or (method == "auto" and fmap.is_markov() is None):
        enc = spectral_enclosure(incidence_matrix(fmap), MARKOV_TOL)
        return EntropyResult("matrix", enc.value, enc.lower, enc.upper, MARKOV_TOL)
    est = counts_entropy(lap_itinerary_counts(fmap, n)).estimate
    return EntropyResult("words", est, est - WORDS_TOL, est + WORDS_TOL, WORDS_TOL)


@dataclass(frozen=True)
class VerifyConfig:
    resolution: Fraction = Fraction(1, 1000)


@dataclass(frozen=True)
class Verdict:
    entry: str
    m: int
    samples: int
    two_fold_failures: tuple[Point, ...]
    m_fold_failures: tuple[Point, ...]
    m_fold_failures_off_critical: tuple[Point, ...]
    hypotheses_hold: bool
    entropy: EntropyResult
    bound: float
    verdict: str
    notes: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "entry": self.entry,
            "m": self.m,
            "samples": self.samples,
            "two_fold_failures": len(self.two_fold_failures),
            "two_fold_failure_examples": [str(p) for p in self.two_fold_failures[:5]],
            "m_fold_failures": len(self.m_fold_failures),
            "m_fold_failures_off_critical": len(self.m_fold_failures_off_critical),
            "m_fold_off_critical_examples": [str(p) for p in self.m_fold_failures_off_critical[:5]],
            "hypotheses_hold": self.hypotheses_hold,
            "entropy": self.entropy.as_dict(),
            "log_m": self.bound,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def hypothesis_gate(fmap: PLTreeMap, m: int, resolution=Fraction(1, 1000)):
    """Sampled cocountable m-foldness: 2-fold on every grid point, m-fold except at critical values."""
    samples = grid_points(fmap.tree, resolution)
    rep = mfold_report(fmap, m, samples)
    crit = set(fmap.critical_values())
    off = tuple(y for y in rep.failures_m if y not in crit)
    return rep, off


def verify_main_theorem(entry: CatalogEntry, config: VerifyConfig = VerifyConfig()) -> Verdict:
    """Non-refutation check: sampled hypotheses imply entropy at least ``log m`` up to tolerance."""
    try:
        fmap = entry.load()
    except (FormatError, MapError, OSError) as exc:
        raise FormatError(f"entry {entry.name}: {exc}") from exc
    rep, off = hypothesis_gate(fmap, entry.m, config.resolution)
    hyp = rep.passes_2 and not off
    ent = map_entropy(fmap)
    bound = math.log(entry.m)
    notes = ["sampled check only; a consistent verdict means the bound was not refuted"]
    if not hyp:
        verdict = "not applicable"
        notes.append("hypotheses fail on the sample grid, so no entropy bound is implied")
    elif ent.upper >= bound - ent.tolerance:
        verdict = "consistent"
    else:
        verdict = "inconsistent"
    if entry.depth is not None:
        notes.append(depth_note(entry.depth))
        notes.append(
            f"{entry.m_on_Y}-fold holds only on the images of the modified intervals, not off a countable set; "
            f"in the infinite construction the exceptional set is uncountable, so entropy log 2 < log {entry.m_on_Y} "
            "does not contradict the bound"
        )
    if entry.entropy is not None and entry.declared_entropy is not None:
        tol = ent.tolerance
        if not (ent.lower - tol <= entry.declared_entropy <= ent.upper + tol):
            notes.append(f"declared entropy {entry.entropy} not reproduced (got {ent.value:.12f})")
    return Verdict(
        entry.name,
        entry.m,
        len(rep.samples),
        tuple(rep.failures_2),
        tuple(rep.failures_m),
        off,
        hyp,
        ent,
        bound,
        verdict,
        tuple(notes),
    )


def verify_all(config: VerifyConfig = VerifyConfig()) -> list[Verdict]:
    return [verify_main_theorem(e, config) for e in catalog()]


__all__ = [
    "CatalogEntry",
    "EntropyResult",
    "Verdict",
    "VerifyConfig",
    "catalog",
    "depth_note",
    "entry_matches_builder",
    "export_catalog",
    "get_entry",
    "hypothesis_gate",
    "interval_points",
    "map_entropy",
    "modified_intervals",
    "prop12_map",
    "verify_all",
    "verify_main_theorem",
    "zigzag_laps",
]
