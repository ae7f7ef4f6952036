"""Counting bounds and forbidden words over random branch graphs."""

import argparse
import time
from collections import Counter

from treefold.branch import find_forbidden_word, has_monochrome_constraint, random_graphs, validate_branch_graph, verify_counting_bounds


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10_000)
    ap.add_argument("--max-ell", type=int, default=4)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    t0 = time.perf_counter()
    by_ell, bad, invalid, mono, missing = Counter(), 0, 0, 0, 0
    for g in random_graphs(args.count, args.max_ell, args.seed):
        if validate_branch_graph(g):
            invalid += 1
            continue
        by_ell[g.ell] += 1
        bad += len(verify_counting_bounds(g, args.p).violations)
        if has_monochrome_constraint(g):
            mono += 1
            missing += find_forbidden_word(g, 7 * g.ell + 1) is None
    print(f"graphs by ell: {dict(sorted(by_ell.items()))}, invalid {invalid}")
    print(f"bound violations for p <= {args.p}: {bad}")
    print(f"monochrome graphs: {mono}, without a forbidden word of length <= 7ell+1: {missing}")
    print(f"{time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
