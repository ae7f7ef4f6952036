"""Periodic points, hull orbits and the separating set for a catalog map."""

import argparse
import json
import time
from fractions import Fraction

from treefold import io
from treefold.catalog import get_entry
from treefold.periodic import CoreConfig, core_report
from treefold.sections import SectionConfig, SectionError, prepare_shift
from treefold.shift import SymbolicError


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("entry", nargs="?", default="sawtooth3")
    ap.add_argument("--max-period", type=int, default=6)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--grid", type=Fraction, default=Fraction(1, 100))
    args = ap.parse_args()
    fmap = get_entry(args.entry).load()
    t0 = time.perf_counter()
    try:
        system = prepare_shift(fmap, SectionConfig(m=args.m, resolution=args.grid)).system
    except (SectionError, SymbolicError) as exc:
        print(f"no shift system ({exc}); keeping every periodic orbit")
        system = None
    rep = core_report(fmap, system, CoreConfig(max_period=args.max_period, m=args.m))
    print(json.dumps(io.to_jsonable(rep), indent=2, default=str))
    print(f"{time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
