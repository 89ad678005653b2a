#!/usr/bin/env python3
"""V against the rotation angle at fixed N, next to the closed form; CSV on stdout.

    python3 scripts/theta_sweep.py --n 6 --points 33 > theta_n6.csv
    python3 scripts/theta_sweep.py --n 5 --noise default
"""

import argparse
import csv
import math
import sys

import numpy as np

from ndcbench.noise import NoiseModel
from ndcbench.protocol import theta_sweep


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--method", default="H")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--points", type=int, default=33, help="grid points on [0, pi]")
    p.add_argument("--noise", choices=("none", "default"), default="none")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--shots", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()

    noise = NoiseModel.default() if a.noise == "default" else None
    grid = np.linspace(0, math.pi, a.points)
    pts = theta_sweep(a.method, a.n, grid, noise, a.runs, a.shots, a.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["method", "n", "theta", "v_mean", "v_sigma", "v_ideal"])
    for pt in pts:
        w.writerow([pt.method.value, pt.n, repr(pt.theta), repr(pt.estimate.v), repr(pt.estimate.sigma),
                    repr(pt.ideal_v)])
    return 0


if __name__ == "__main__":
    sys.exit(main())
