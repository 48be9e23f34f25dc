"""Rounds-to-success of subspace iteration against block size, written as CSV plus plot data.

    python3 scripts/round_scaling.py --out results/round_scaling.csv [--seeds 50] [--jobs 1]
"""
import argparse
from pathlib import Path

from adasense.harness import ExperimentConfig, curve, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--alpha", type=float, default=30.0)
    ap.add_argument("--blocks", default="1,2,4,8,16")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--round-budget", type=int, default=25)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/round_scaling.csv")
    args = ap.parse_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(n=[args.n], r=[1], alpha=[args.alpha],
                           block=[int(b) for b in args.blocks.split(",")],
                           algorithm=["subspace_iteration", "block_krylov"], seeds=args.seeds,
                           round_budget=args.round_budget)
    run(cfg, jobs=args.jobs, out=args.out)
    text = curve(args.out, "k", "rounds_to_success", "algorithm")
    Path(args.out).with_suffix(".dat").write_text(text)
    print(text, end="")


if __name__ == "__main__":
    main()
