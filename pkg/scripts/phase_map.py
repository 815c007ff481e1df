"""Phase-transition map of TV recovery (defaults: m in {16, 32, 64}, delta*m in [0.5, 3], 20 trials).

Set RESOLIMIT_WORKERS to use several processes; --resume continues an interrupted run.
"""

import argparse
import sys

from resolimit.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/phase.csv")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--resume", action="store_true")
    a = ap.parse_args()
    argv = ["phase", "--trials", str(a.trials), "--seed", str(a.seed), "--out", a.out]
    sys.exit(main(argv + (["--resume"] if a.resume else [])))
