"""Command line: ``adasense {gen,run,verify,curve}``.

Exit status 0 on success, 1 when a verification fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import sys

from ..instances import InstanceError, dump, gen_planted
from .checks import SUITES, verify
from .config import ConfigError, load_config
from .curve import CurveError, curve
from .run import run


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adasense", description="Adaptive matrix sensing experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="sample a planted instance and dump it")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--r", type=int, default=1)
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run an experiment sweep")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int, help="override the config's base seed")
    r.add_argument("--jobs", type=int, default=1)

    v = sub.add_parser("verify", help="run verification batteries")
    v.add_argument("--suite", default="all", choices=sorted(SUITES) + ["all"])
    v.add_argument("--out", help="also write the report here")

    c = sub.add_parser("curve", help="aggregate a report CSV into plot data")
    c.add_argument("csv")
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.add_argument("--group-by", required=True)
    c.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            dump(gen_planted(args.n, args.r, args.alpha, args.seed), args.out)
            return 0
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.base_seed = args.seed
            out = args.out or cfg.out
            if not out:
                raise ConfigError("no output path: pass --out or set out in the config")
            rows = run(cfg, jobs=args.jobs, out=out)
            print(f"wrote {len(rows)} rows to {out}")
            return 0
        if args.command == "verify":
            results = verify(args.suite)
            report = "\n".join(res.line() for res in results) + "\n"
            sys.stdout.write(report)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(report)
            return 0 if all(res.passed for res in results) else 1
        text = curve(args.csv, args.x, args.y, args.group_by)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except (ConfigError, CurveError, InstanceError, FileNotFoundError) as exc:
        print(f"adasense: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
