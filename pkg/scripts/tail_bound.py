"""Empirical tail of the information functional for one fixed query matrix, with the fitted decay rate.

    python3 scripts/tail_bound.py [--n 64] [--k 64] [--trials 10000] [--kind kron|haar]
"""
import argparse

from adasense.theory import TAIL_GRID, tail_probability_mc


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seeds", default="0,1,2,3")
    ap.add_argument("--kind", default="kron", choices=["kron", "haar"])
    args = ap.parse_args()
    print("# seed C probability count")
    for seed in (int(s) for s in args.seeds.split(",")):
        t = tail_probability_mc(args.n, args.k, TAIL_GRID, args.trials, seed, args.kind)
        for c, p, cnt in zip(t.C, t.probability, t.counts):
            print(seed, c, p, cnt)
        print(f"# seed {seed}: beta={t.beta:.4g} correlation={t.correlation:.4g}")


if __name__ == "__main__":
    main()
