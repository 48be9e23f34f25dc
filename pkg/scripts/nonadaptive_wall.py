"""Success rate of the one-round orthonormal sketch as the number of measurements m grows.

    python3 scripts/nonadaptive_wall.py --out results/nonadaptive.csv [--n 64] [--seeds 100]
"""
import argparse
from pathlib import Path

from adasense.harness import ExperimentConfig, curve, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--alpha", type=float, default=30.0)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--out", default="results/nonadaptive.csv")
    args = ap.parse_args()
    n = args.n
    grid = sorted({n, 4 * n, n * n // 16, n * n // 4, n * n // 2, n * n})
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(n=[n], r=[1], alpha=[args.alpha], block=grid, algorithm=["nonadaptive"],
                           seeds=args.seeds, round_budget=1)
    run(cfg, out=args.out)
    text = curve(args.out, "k", "relative_frobenius_error", "algorithm")
    Path(args.out).with_suffix(".dat").write_text(text)
    print(text, end="")


if __name__ == "__main__":
    main()
