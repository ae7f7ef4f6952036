"""Entropy and lower-bound verdict for each built-in catalog entry."""

import argparse
import time
from fractions import Fraction

from treefold.catalog import VerifyConfig, catalog, map_entropy, verify_main_theorem


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=Fraction, default=Fraction(1, 1000))
    args = ap.parse_args()
    cfg = VerifyConfig(resolution=args.grid)
    print(f"{'entry':<16}{'m':>3}{'method':>8}{'h':>14}{'log m':>10}  verdict")
    for entry in catalog():
        t0 = time.perf_counter()
        h = map_entropy(entry.load())
        v = verify_main_theorem(entry, cfg)
        print(
            f"{entry.name:<16}{entry.m:>3}{h.method:>8}{h.value:>14.9f}{v.as_dict().get('log_m', 0):>10.5f}"
            f"  {v.as_dict()['verdict']}  ({time.perf_counter() - t0:.2f} s)"
        )


if __name__ == "__main__":
    main()
