"""Run the Clifford check on every catalog entry and tabulate the verdicts."""
import argparse
import csv
import sys

from finsler_lab.catalog import list_catalog
from finsler_lab.isometries import clifford_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--method", default="auto")
    args = ap.parse_args()

    out = csv.writer(sys.stdout)
    out.writerow(["id", "expected", "verdict", "mean", "spread", "matches"])
    mismatches = 0
    for e in list_catalog():
        r = clifford_check(e.space, e.isometry, args.samples, args.seed, args.tol, args.method)
        mismatches += r.verdict != e.expected
        out.writerow([e.id, e.expected, r.verdict, f"{r.mean:.6g}", f"{r.spread:.3g}",
                      r.verdict == e.expected])
    sys.exit(1 if mismatches else 0)


if __name__ == "__main__":
    main()
