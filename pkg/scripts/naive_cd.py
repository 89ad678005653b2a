#!/usr/bin/env python3
"""Classical disturbance at theta = pi for the naive and the mitigated H-method circuits.

The naive circuits differ between the two sub-protocols, so idle noise during
the long readout acts on one branch only and leaks into V. CSV on stdout.

    python3 scripts/naive_cd.py --n 4 8 12 16 20
"""

import argparse
import csv
import math
import sys

from ndcbench.noise import NoiseModel
from ndcbench.protocol import run_point


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[4, 8, 12, 16, 20])
    p.add_argument("--methods", nargs="+", default=["H", "NaiveH", "M", "NaiveM"])
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--shots", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()

    noise = NoiseModel.default()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["method", "n", "v_cd", "sigma_cd"])
    for n in a.n:
        for method in a.methods:
            est = run_point(method, n, math.pi, noise, a.runs, a.shots, a.seed)
            w.writerow([method, n, f"{est.v:.5f}", f"{est.sigma:.5f}"])
            sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
