"""Analytic M_delta curve over delta in [2.1, 4.0] plus the numeric thresholds where they resolve."""

import argparse
import sys

from resolimit.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/mdelta")
    ap.add_argument("--cap", type=int, default=401)
    a = ap.parse_args()
    rc = main(["mdelta-curve", "--deltas", "2.1:4.0:0.05", "--out", f"{a.out}_analytic.csv"])
    rc = rc or main(["mdelta-curve", "--mode", "numeric", "--cap", str(a.cap), "--deltas", "1.5:4.0:0.25",
                     "--out", f"{a.out}_numeric.csv"])
    sys.exit(rc)
