"""Aggregate a report CSV into whitespace-separated plot columns."""
from __future__ import annotations

from collections import defaultdict

import numpy as np

from .run import COLUMNS, read_report


class CurveError(ValueError):
    pass


def _number(s: str) -> float:
    if s in ("True", "False"):
        return float(s == "True")
    return float(s)


def _sort_key(v: str):
    try:
        return (0, float(v), "")
    except ValueError:
        return (1, 0.0, v)


def curve(csv_path, x: str, y: str, group_by: str) -> str:
    """Median and quartiles of ``y`` per (group, x); censored values stay at their budget."""
    for name in (x, y, group_by):
        if name not in COLUMNS:
            raise CurveError(f"unknown field {name!r}")
    rows = read_report(csv_path)
    cells = defaultdict(list)
    for row in rows:
        cells[(row[group_by], row[x])].append(_number(row[y]))
    lines = [f"# {group_by} {x} {y}_median {y}_q1 {y}_q3 count"]
    for (g, xv) in sorted(cells, key=lambda gx: (_sort_key(gx[0]), _sort_key(gx[1]))):
        vals = np.array(cells[(g, xv)])
        q1, med, q3 = (float(q) for q in np.percentile(vals, [25, 50, 75]))
        lines.append(f"{g} {xv} {med!r} {q1!r} {q3!r} {vals.size}")
    return "\n".join(lines) + "\n"
