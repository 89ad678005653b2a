#!/usr/bin/env python3
"""Coarse N scan used to pick the default noise model.

Prints V at pi/4, the pi control and the discriminant for each method. Pass
a JSON object to override fields of the default model:

    python3 scripts/calibrate_noise.py '{"p2": 0.002}'
"""

import json
import math
import sys
import time

from ndcbench.noise import NoiseModel
from ndcbench.protocol import run_point

NS = (4, 8, 12, 16, 20)


def main() -> int:
    model = NoiseModel.default()
    if len(sys.argv) > 1:
        model = NoiseModel.from_dict({**model.to_dict(), **json.loads(sys.argv[1])})
    print(model)
    t0 = time.time()
    for method in ("H", "M", "NaiveH"):
        for n in NS:
            a = run_point(method, n, math.pi / 4, model)
            b = run_point(method, n, math.pi, model)
            disc = a.v - abs(b.v) - 3 * math.hypot(a.sigma, b.sigma)
            print(f"{method:6} {n:2} V={a.v:.4f}+/-{a.sigma:.4f} CD={b.v:+.4f}+/-{b.sigma:.4f} disc={disc:+.4f}",
                  flush=True)
    print(f"{time.time() - t0:.0f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
