"""Monte-Carlo coverage of delta-method Wald intervals.

    python3 scripts/coverage.py --reps 2000 --seed 1
"""

import argparse
import math

import numpy as np

from deltaif.empirical import normal_quantile
from deltaif.estimands import (
    correlation_inference,
    mean_inference,
    quantile_inference,
    ratio_of_means_inference,
    risk_ratio_inference,
)


def covered(ci, truth):
    return ci.lower <= truth <= ci.upper


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    R = args.reps

    hits = {}
    hits["risk ratio (n=100/arm)"] = np.mean(
        [covered(risk_ratio_inference(a / 100, 100, b / 100, 100).ci, 1.5)
         for a, b in zip(rng.binomial(100, 0.6, R), rng.binomial(100, 0.4, R))]
    )
    hits["mean, Uniform, n=1000"] = np.mean([covered(mean_inference(rng.random(1000)).ci, 0.5) for _ in range(R)])
    cov = [[1, 0.3], [0.3, 2]]
    hits["ratio of means, n=500"] = np.mean(
        [covered(ratio_of_means_inference(rng.multivariate_normal([3, 4], cov, 500)).ci, 0.75) for _ in range(R)]
    )
    q = 50 + normal_quantile(0.25)
    hits["lower quartile, n=1000"] = np.mean(
        [covered(quantile_inference(rng.normal(50, 1, 1000), 0.25).ci, q) for _ in range(R)]
    )
    rc = [[1, 0.83], [0.83, 1]]
    hits["correlation 0.83, n=500"] = np.mean(
        [covered(correlation_inference(rng.multivariate_normal([0, 0], rc, 500)).ci, 0.83) for _ in range(R)]
    )
    mc = math.sqrt(0.95 * 0.05 / R)
    print(f"nominal 0.95, Monte-Carlo sd {mc:.4f} over {R} replicates")
    for name, c in hits.items():
        print(f"  {name:<26} {c:.4f}")


if __name__ == "__main__":
    main()
