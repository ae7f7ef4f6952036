"""Command-line front end; every subcommand prints one JSON document."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from typing import Sequence

from . import branch, catalog, io, periodic, plmap, sections, shift


def _load(args):
    return io.load_map(args.tree, args.map)


def _system(fmap, m: int, grid) -> tuple[shift.ShiftSystem | None, str | None]:
    try:
        prepared = sections.prepare_shift(fmap, sections.SectionConfig(m=m, resolution=grid))
    except (sections.SectionError, shift.SymbolicError) as exc:
        return None, str(exc)
    return prepared.system, None


def _address(tree, x) -> dict:
    a = tree.address(x)
    return {"indices": list(a.indices), "edge": a.tail_edge, "t": a.tail_position}


# -- subcommands -------------------------------------------------------------------------
def cmd_order(args) -> dict:
    tree = io.load_tree(args.tree)
    a, b = io.parse_point(tree, args.a), io.parse_point(tree, args.b)
    c = tree.order_cmp(a, b)
    return {
        "a": str(a),
        "b": str(b),
        "address_a": _address(tree, a),
        "address_b": _address(tree, b),
        "compare": c,
        "relation": {-1: "a precedes b", 0: "equal", 1: "b precedes a"}[c],
    }


def cmd_preimages(args) -> dict:
    fmap = _load(args)
    y = io.parse_point(fmap.tree, args.point)
    pre = fmap.preimages(y)
    lo, hi = fmap.extreme_preimages(y) if pre.components else (None, None)
    return {
        "value": str(y),
        "count": pre.count,
        "points": [str(p) for p in fmap.tree.sorted(pre.points)],
        "intervals": [[iv.edge, str(iv.lo), str(iv.hi)] for iv in pre.intervals],
        "min": str(lo) if lo is not None else None,
        "max": str(hi) if hi is not None else None,
    }


def cmd_entropy(args) -> dict:
    fmap = _load(args)
    method = args.method or "auto"
    res = catalog.map_entropy(fmap, method, args.n)
    out = res.as_dict()
    out["markov"] = fmap.is_markov() is None
    if res.method == "matrix":
        out["states"] = len(plmap.incidence_matrix(fmap).states)
    else:
        out["n"] = args.n
    return out


def cmd_mfold(args) -> dict:
    fmap = _load(args)
    pts = plmap.grid_points(fmap.tree, args.grid)
    rep = plmap.mfold_report(fmap, args.m, pts)
    crit = set(fmap.critical_values())
    off = [y for y in rep.failures_m if y not in crit]
    return {
        "m": args.m,
        "samples": len(rep.samples),
        "m_fold": rep.passes,
        "two_fold": rep.passes_2,
        "m_fold_failures": [str(p) for p in rep.failures_m[: args.limit]],
        "m_fold_failure_count": len(rep.failures_m),
        "m_fold_failures_off_critical_values": len(off),
        "two_fold_failures": [str(p) for p in rep.failures_2[: args.limit]],
        "two_fold_failure_count": len(rep.failures_2),
        "min_count": min((s.count for s in rep.samples), default=None),
    }


def cmd_section(args) -> dict:
    fmap = _load(args)
    report = sections.regular_values(fmap, args.m, args.grid)
    sec = sections.build_section(fmap, args.m, report)
    metrics = sections.section_metrics(fmap, sec)
    return {
        "m": args.m,
        "regular_values": len(report.regular),
        "irregular_values": [str(p) for p in report.irregular[: args.limit]],
        "components": [m.as_dict() for m in metrics],
        "monotone": sections.is_monotone(fmap, sec),
        "spanning": sections.is_spanning(fmap, sec),
        "variation_below_half_mesh": all(m.variation_ok for m in metrics),
        "note": sec.note,
    }


def cmd_shift(args) -> dict:
    fmap = _load(args)
    system, err = _system(fmap, args.m, args.grid)
    if system is None:
        raise shift.SymbolicError(f"no shift system: {err}")
    out = {"m": system.m, "eps": str(system.eps), "audit": system.audit}
    if args.classify:
        x = io.parse_point(fmap.tree, args.classify)
        pc = shift.classify_point(system, fmap, x, args.depth)
        out["point"] = str(x)
        out["addresses"] = sorted(system.addresses(x))
        out["class"] = {"kernel": pc.in_kernel, "center": pc.in_center, "core_approx": pc.in_core_approx, "depth": pc.depth}
    if args.itinerary:
        x = io.parse_point(fmap.tree, args.itinerary)
        words = shift.itinerary_set(system, fmap, x, args.n)
        out["point"] = str(x)
        out["itinerary_count"] = len(words)
        out["itineraries"] = ["".join(map(str, w)) for w in sorted(words)[: args.limit]]
    return out


def cmd_branch_graph(args) -> dict:
    fmap = _load(args)
    system, err = _system(fmap, args.m, args.grid)
    if system is None:
        raise shift.SymbolicError(f"no shift system: {err}")
    g = branch.build_branch_graph(fmap, system, args.at, io.rational(args.radius))
    rep = branch.verify_counting_bounds(g, args.p)
    return {"graph": g.as_dict(), "ell": g.ell, "q": g.q, "bounds": rep.as_dict(), "forbidden_word": branch.find_forbidden_word(g, 7 * g.ell + 1)}


def cmd_branch_audit(args) -> dict:
    if args.synthetic:
        data = io.read_json(args.synthetic)
        graphs = [branch.BranchGraph.from_dict(d) for d in (data["graphs"] if isinstance(data, dict) else data)]
        source = args.synthetic
    else:
        graphs = branch.random_graphs(args.random, args.l, args.seed)
        source = f"random(count={args.random}, max_ell={args.l}, seed={args.seed})"
    t0 = time.perf_counter()
    invalid, violations, mono, missing = [], [], 0, []
    for k, g in enumerate(graphs):
        bad = branch.validate_branch_graph(g)
        if bad:
            invalid.append({"graph": k, "violations": [str(v) for v in bad]})
            continue
        rep = branch.verify_counting_bounds(g, args.p, search_p=7)
        violations += [{"graph": k, **v} for v in rep.violations]
        if branch.has_monochrome_constraint(g):
            mono += 1
            if branch.find_forbidden_word(g, 7 * g.ell + 1) is None:
                missing.append(k)
    return {
        "source": source,
        "graphs": len(graphs),
        "invalid": invalid,
        "p_max": args.p,
        "bound_violations": violations,
        "monochrome_graphs": mono,
        "monochrome_without_forbidden_word": missing,
        "seconds": round(time.perf_counter() - t0, 3),
    }


def cmd_stumps(args) -> dict:
    return branch.stump_cut_end_audit(args.depth).as_dict()


def cmd_core(args) -> dict:
    fmap = _load(args)
    system, err = (None, "skipped") if args.no_system else _system(fmap, args.m, args.grid)
    cfg = periodic.CoreConfig(max_period=args.max_period, depth=args.depth, m=args.m)
    out = periodic.core_report(fmap, system, cfg)
    out["shift_system"] = "section" if system is not None else f"none ({err}); all periodic orbits kept"
    return out


def cmd_verify(args) -> dict:
    cfg = catalog.VerifyConfig(resolution=io.rational(args.grid))
    entries = catalog.catalog() if args.all or not args.entry else [catalog.get_entry(args.entry)]
    return {"verdicts": [catalog.verify_main_theorem(e, cfg).as_dict() for e in entries]}


# -- parser ---------------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treefold", description="Exact experiments with piecewise-linear tree maps.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write JSON here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)
    add = sub.add_parser

    def add_parser(name, **kw):
        return add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    def tm(name, func, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("tree")
        s.add_argument("map")
        s.set_defaults(func=func)
        s.add_argument("--limit", type=int, default=20, help="cap on listed examples")
        return s

    s = sub.add_parser("order", help="compare two points in the address order")
    s.add_argument("tree")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_order)

    s = tm("preimages", cmd_preimages, "exact preimages of a point")
    s.add_argument("point")

    s = tm("entropy", cmd_entropy, "topological entropy")
    s.add_argument("--method", choices=["matrix", "words"])
    s.add_argument("--n", type=int, default=catalog.WORDS_N)

    s = tm("mfold", cmd_mfold, "preimage counts on a grid")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--grid", type=io.rational, default=Fraction(1, 100))

    s = tm("section", cmd_section, "monotone spanning section")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--grid", type=io.rational, default=Fraction(1, 100))

    s = tm("shift", cmd_shift, "shift system, point classes and itineraries")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--grid", type=io.rational, default=Fraction(1, 100))
    s.add_argument("--classify")
    s.add_argument("--depth", type=int, default=8)
    s.add_argument("--itinerary")
    s.add_argument("--n", type=int, default=6)

    s = tm("branch-graph", cmd_branch_graph, "branch graph at a fixed branchpoint")
    s.add_argument("--at", required=True)
    s.add_argument("--radius", required=True)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--grid", type=io.rational, default=Fraction(1, 100))
    s.add_argument("--p", type=int, default=3)

    s = sub.add_parser("branch-audit", help="counting bounds over synthetic or random branch graphs")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--synthetic")
    g.add_argument("--random", type=int)
    s.add_argument("--l", type=int, default=4, help="largest number of germs")
    s.add_argument("--p", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_branch_audit)

    s = sub.add_parser("stumps", help="exhaustive cut-end audit")
    s.add_argument("--depth", type=int, required=True)
    s.set_defaults(func=cmd_stumps)

    s = tm("core", cmd_core, "periodic points, hull orbits and separating set")
    s.add_argument("--max-period", type=int, default=8)
    s.add_argument("--depth", type=int, default=8)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--grid", type=io.rational, default=Fraction(1, 100))
    s.add_argument("--no-system", action="store_true", help="keep all periodic orbits")

    s = sub.add_parser("verify", help="entropy bound check on catalog entries")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--entry")
    g.add_argument("--all", action="store_true")
    s.add_argument("--grid", default="1/1000")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except (
        io.FormatError,
        plmap.MapError,
        sections.SectionError,
        shift.SymbolicError,
        branch.BranchGraphError,
        periodic.CoreError,
        KeyError,
        ValueError,
        OSError,
    ) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(json.dumps({"error": type(exc).__name__, "message": msg}), file=sys.stderr)
        return 2
    text = json.dumps(_clean(io.to_jsonable(result)), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _clean(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return obj


if __name__ == "__main__":
    raise SystemExit(main())
