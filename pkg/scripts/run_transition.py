#!/usr/bin/env python3
"""N sweep of both methods under the default noise model; writes results/, metric and summary.

    python3 scripts/run_transition.py -o runs/transition --n-max 20 --workers 4
"""

import argparse
import logging
import sys

from ndcbench.bench import ExperimentConfig, run_benchmark
from ndcbench.noise import NoiseModel


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("-o", "--output", default="runs/transition")
    p.add_argument("--methods", nargs="+", default=["H", "M"])
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--shots", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = ExperimentConfig(methods=tuple(a.methods), n_min=a.n_min, n_max=a.n_max, noise=NoiseModel.default(),
                           n_runs=a.runs, n_shots=a.shots, seed=a.seed, output=a.output, workers=a.workers)

    def progress(method, n, label, est):
        logging.info("%-6s N=%2d theta=%-5s V=%+.4f +/- %.4f", method, n, label, est.v, est.sigma)

    result = run_benchmark(cfg, progress)
    result.write(a.output)
    cfg.save(f"{a.output}/config.yaml")
    sys.stdout.write(result.summary())
    return 3 if result.resource_limited else 0


if __name__ == "__main__":
    sys.exit(main())
