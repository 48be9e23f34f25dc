"""Fit the plant-norm constant c' and store it as a test fixture.

c' is the 0.1% quantile of sigma_min(U) / sqrt(n) over planted instances at
n = 256, r = 1..8, 1000 seeds each.  Run from the repository root:

    python3 scripts/calibrate_plant_norm.py [--out tests/fixtures/plant_norm_constant.json]
"""
import argparse
import json

import numpy as np

from adasense.instances import gen_planted


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--ranks", default="1,2,3,4,5,6,7,8")
    ap.add_argument("--seeds", type=int, default=1000)
    ap.add_argument("--quantile", type=float, default=0.001)
    ap.add_argument("--out", default="tests/fixtures/plant_norm_constant.json")
    args = ap.parse_args()
    ranks = [int(r) for r in args.ranks.split(",")]
    stats = []
    for r in ranks:
        for seed in range(args.seeds):
            U = gen_planted(args.n, r, 1.0, seed).U
            stats.append(np.linalg.svd(U, compute_uv=False)[-1] / np.sqrt(args.n))
    c_prime = float(np.quantile(stats, args.quantile))
    record = {
        "c_prime": c_prime,
        "statistic": "sigma_min(U) / sqrt(n)",
        "quantile": args.quantile,
        "n": args.n,
        "ranks": ranks,
        "seeds_per_rank": args.seeds,
        "samples": len(stats),
        "numpy_version": np.__version__,
        "script": "scripts/calibrate_plant_norm.py",
    }
    with open(args.out, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    print(json.dumps(record, indent=2))


if __name__ == "__main__":
    main()
