"""Experiment configuration: flat ``key = value`` files, lists as comma-separated tokens."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

ALGORITHMS = ("subspace_iteration", "block_krylov", "nonadaptive")
CRITERIA = ("plant-frobenius", "spectral-lra")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n: list = field(default_factory=lambda: [64])
    r: list = field(default_factory=lambda: [1])
    alpha: list = field(default_factory=lambda: [30.0])
    block: list = field(default_factory=lambda: [1])
    algorithm: list = field(default_factory=lambda: ["subspace_iteration"])
    mode: str = "exact"
    sigma: float = 1.0
    background: str = "gaussian"
    seeds: int = 1
    base_seed: int = 0
    round_budget: int = 25
    c: float = 0.01
    criterion: str = "plant-frobenius"
    out: str | None = None

    def validate(self) -> None:
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if self.round_budget < 1:
            raise ConfigError("round_budget must be >= 1")
        if self.mode not in ("exact", "noisy"):
            raise ConfigError(f"mode must be exact or noisy, got {self.mode!r}")
        if self.background not in ("gaussian", "none"):
            raise ConfigError(f"background must be gaussian or none, got {self.background!r}")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        for i, point in enumerate(self.grid()):
            problem = point_problem(point)
            if problem:
                raise ConfigError(f"grid point {i} {point}: {problem}")

    def grid(self) -> list[dict]:
        points = []
        for n in self.n:
            for r in self.r:
                for alpha in self.alpha:
                    for block in self.block:
                        for algo in self.algorithm:
                            points.append({"n": n, "r": r, "alpha": alpha, "block": block, "algorithm": algo})
        return points


def point_problem(p: dict) -> str | None:
    n, r, block, algo = p["n"], p["r"], p["block"], p["algorithm"]
    if algo not in ALGORITHMS:
        return f"unknown algorithm {algo!r}"
    if n < 2:
        return "n must be >= 2"
    if not 1 <= r <= n / 2:
        return "r must satisfy 1 <= r <= n/2"
    if p["alpha"] < 0:
        return "alpha must be nonnegative"
    if algo == "nonadaptive":
        if not 0 <= block <= n * n:
            return "m must lie in [0, n^2]"
    elif block < r:
        return "block must be >= r"
    return None


_LISTS = {"n": int, "r": int, "alpha": float, "block": int, "algorithm": str}
_SCALARS = {"mode": str, "sigma": float, "background": str, "seeds": int, "base_seed": int,
            "round_budget": int, "c": float, "criterion": str, "out": str}
_ALIASES = {"m": "block", "k": "block"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Unknown keys abort with their line number."""
    cfg = ExperimentConfig()
    known = {f.name for f in fields(cfg)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _LISTS:
                conv = _LISTS[key]
                setattr(cfg, key, [conv(tok.strip()) for tok in value.split(",") if tok.strip()])
            else:
                setattr(cfg, key, _SCALARS[key](value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
