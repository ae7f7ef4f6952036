"""Exhaustive cut-end audit over binary stumps."""

import argparse
import json
import time

from treefold.branch import stump_cut_end_audit


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=4)
    args = ap.parse_args()
    t0 = time.perf_counter()
    audit = stump_cut_end_audit(args.depth)
    print(json.dumps(audit.as_dict(), indent=2, default=str))
    print(f"{time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
