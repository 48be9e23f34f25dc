"""Verification batteries shared by the ``verify`` subcommand and the acceptance tests.

Every check returns a CheckResult; parameters default to the desk-scale
settings the acceptance suite uses.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..algorithms import reduced_rank_regression
from ..instances import gen_planted, symmetrize, translate_measurement, with_background
from ..linalg import best_rank, norm, singular_values
from ..oracle import open_session
from ..queries import KronBatch
from ..theory import (TAIL_GRID, FanoCheck, bayes_risk_pointwise, fano_bound, information_mean_mc,
                      kl_conditioning_check, kl_gaussian, kl_gaussian_identity, random_fano_check,
                      random_kl_instance, tail_probability_mc)
from .config import ExperimentConfig
from .run import run


@dataclass
class CheckResult:
    name: str
    passed: bool
    instances: int
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = " ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"{tag} {self.name} instances={self.instances} time={self.seconds:.1f}s {extra}".rstrip()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- oracle equivalence and information --------------------------------------------

def two_round_plan(oracle) -> np.ndarray:
    """Round 1 reads e1(x)e1 and e1(x)e2; round 2 reads along e2 (x) rotations set by round 1."""
    n = oracle.dim
    e = np.eye(n)
    y1 = oracle.measure(KronBatch(e[:1], e[:2]))
    oracle.end_round()
    theta = math.atan2(y1[1], y1[0])
    right = np.zeros((2, n))
    right[0, :2] = (math.cos(theta), math.sin(theta))
    right[1, :2] = (-math.sin(theta), math.cos(theta))
    y2 = oracle.measure(KronBatch(e[1:2], right))
    oracle.end_round()
    return np.concatenate([y1, y2])


@_timed
def check_equivalence(n: int = 32, sessions: int = 10_000, alpha: float = 5.0, seed: int = 0) -> CheckResult:
    """Noisy measurements of the plant against exact measurements of plant + fresh G."""
    from scipy.stats import ks_2samp
    inst = gen_planted(n, 1, alpha, seed)
    noisy = np.empty((sessions, 4))
    exact = np.empty((sessions, 4))
    for i in range(sessions):
        s_noise, s_bg = np.random.SeedSequence([seed, i]).generate_state(2)
        noisy[i] = two_round_plan(open_session(inst, "noisy", 1.0, round_budget=2, seed=int(s_noise)))
        exact[i] = two_round_plan(open_session(with_background(inst, int(s_bg)), "exact", round_budget=2))
    pvals = [float(ks_2samp(noisy[:, j], exact[:, j]).pvalue) for j in range(4)]
    return CheckResult("oracle-equivalence", min(pvals) >= 0.01, sessions, {"ks_pvalues": pvals})


@_timed
def check_information_mean(n: int = 64, k: int = 128, draws: int = 1000, seed: int = 0) -> CheckResult:
    x = information_mean_mc(n, k, draws, seed, kind="haar")
    mean = float(x.mean())
    return CheckResult("information-expectation", abs(mean - k) <= 0.05 * k, draws,
                       {"mean": mean, "k": k, "relative_gap": abs(mean - k) / k})


# -- tail bound ---------------------------------------------------------------------

@_timed
def check_tail(n: int = 64, k: int = 64, grid=TAIL_GRID, trials: int = 10_000, seed: int = 0) -> CheckResult:
    t = tail_probability_mc(n, k, grid, trials, seed)
    monotone = bool(np.all(np.diff(t.probability) <= 0))
    ok = monotone and t.correlation <= -0.95 and t.beta > 0
    return CheckResult("tail-bound", ok, trials,
                       {"probabilities": t.probability.tolist(), "beta": t.beta,
                        "correlation": t.correlation, "monotone": monotone})


# -- KL and Fano --------------------------------------------------------------------

@_timed
def check_kl(instances: int = 1000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    failures = 0
    worst = -math.inf
    for _ in range(instances):
        lhs, rhs, holds = kl_conditioning_check(*random_kl_instance(rng))
        failures += not holds
        worst = max(worst, lhs - rhs)
    # identity-covariance shortcut against the general Gaussian formula
    gap = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 8))
        m1, m2 = rng.standard_normal(d), rng.standard_normal(d)
        gap = max(gap, abs(kl_gaussian_identity(m1, m2) - kl_gaussian(m1, np.eye(d), m2, np.eye(d))))
    ok = failures == 0 and gap <= 1e-12
    return CheckResult("kl-conditioning", ok, instances,
                       {"failures": failures, "max_lhs_minus_rhs": worst, "gaussian_formula_gap": gap})


@_timed
def check_fano_trivial() -> CheckResult:
    uninformative = FanoCheck([0.5, 0.3, 0.2], [[0.25, 0.75]] * 3, np.ones((3, 3)) - np.eye(3))
    disjoint = FanoCheck([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], np.ones((2, 2)) - np.eye(2))
    a = fano_bound(uninformative)
    b = fano_bound(disjoint)
    ok = (a.holds and abs(a.mutual_information) <= 1e-12 and abs(a.r_bayes - a.r0) <= 1e-12
          and a.bound <= a.r0 and b.holds and b.r_bayes == 0.0 and b.bound <= 0.0)
    return CheckResult("fano-trivial", ok, 2, {"uninformative_bound": a.bound, "uninformative_r0": a.r0,
                                               "disjoint_bound": b.bound})


@_timed
def check_fano(instances: int = 500, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    failures = 0
    route_gap = 0.0
    slack = math.inf
    for _ in range(instances):
        fc = random_fano_check(rng)
        res = fano_bound(fc, method="enumerate")
        failures += not res.holds
        route_gap = max(route_gap, abs(res.r_bayes - bayes_risk_pointwise(fc)))
        slack = min(slack, res.r_bayes - res.bound)
    ok = failures == 0 and route_gap <= 1e-12
    return CheckResult("fano-bound", ok, instances,
                       {"failures": failures, "min_slack": slack, "enumeration_vs_pointwise": route_gap})


# -- norms and exact identities ------------------------------------------------------

@_timed
def check_gaussian_norms(n: int = 128, seeds: int = 500, base_seed: int = 0) -> CheckResult:
    spec_fail = 0
    schatten_ok = 0
    for s in range(base_seed, base_seed + seeds):
        G = np.random.default_rng(s).standard_normal((n, n))
        sv = singular_values(G)
        spec_fail += sv[0] > 3 * math.sqrt(n)
        schatten_ok += float(np.sum(sv ** 4) ** 0.25) <= 30 * n ** 0.75
    fail_rate = spec_fail / seeds
    hold_rate = schatten_ok / seeds
    return CheckResult("gaussian-norms", fail_rate <= 0.01 and hold_rate >= 0.85, seeds,
                       {"spectral_failure_rate": fail_rate, "schatten4_hold_rate": hold_rate})


@_timed
def check_symmetrization(n: int = 32, measurements: int = 100, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    inst = gen_planted(n, 1, 10.0, seed)
    Msym = symmetrize(inst).observed
    sym = singular_values(Msym)
    doubled = np.repeat(singular_values(inst.observed), 2)
    spec_err = float(np.max(np.abs(sym - doubled)) / doubled[0])
    worst = 0.0
    M = inst.observed
    for _ in range(measurements):
        S = rng.standard_normal((2 * n, 2 * n))
        lhs = float(np.sum(S * Msym))
        rhs = float(np.sum(translate_measurement(S) * M))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    ok = spec_err <= 1e-8 and worst <= 1e-12
    return CheckResult("symmetrization", ok, measurements,
                       {"spectrum_relative_error": spec_err, "translation_relative_error": worst})


@_timed
def check_eckart_young(instances: int = 200, seed: int = 0, slack: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(seed)
    ey_bad = 0
    trunc_bad = 0
    for _ in range(instances):
        m, k = (int(x) for x in rng.integers(2, 33, size=2))
        A = rng.standard_normal((m, k)) * rng.uniform(0.1, 10)
        r = int(rng.integers(1, min(m, k) + 1))
        sv = singular_values(A)
        D = A - best_rank(A, r)
        s_next = sv[r] if r < sv.size else 0.0
        scale = max(sv[0], 1.0)
        ey_bad += abs(norm(D, "spectral") - s_next) > slack * scale
        ey_bad += abs(float(np.sum(D * D)) - float(np.sum(sv[r:] ** 2))) > slack * scale ** 2
    for _ in range(instances):
        m = int(rng.integers(2, 33))
        r = int(rng.integers(1, m + 1))
        A = rng.standard_normal((m, r)) @ rng.standard_normal((r, m))
        B = A + rng.standard_normal((m, m)) * rng.uniform(0.01, 10)
        lhs = norm(A - best_rank(B, r), "spectral")
        rhs = 2 * norm(A - B, "spectral")
        trunc_bad += lhs > rhs + slack * max(rhs, 1.0)
    return CheckResult("eckart-young-truncation", ey_bad == 0 and trunc_bad == 0, 2 * instances,
                       {"eckart_young_violations": ey_bad, "truncation_violations": trunc_bad})


# -- recovery experiments ------------------------------------------------------------

def _medians(rows, key_fn):
    groups: dict = {}
    for row in rows:
        groups.setdefault(key_fn(row), []).append(row)
    return groups


@_timed
def check_round_scaling(n: int = 256, alpha: float = 30.0, blocks=(1, 2, 4, 8, 16), seeds: int = 50,
                        round_budget: int = 25, jobs: int = 1, base_seed: int = 0) -> CheckResult:
    cfg = ExperimentConfig(n=[n], r=[1], alpha=[alpha], block=list(blocks), algorithm=["subspace_iteration"],
                           seeds=seeds, base_seed=base_seed, round_budget=round_budget, c=0.01)
    rows = run(cfg, jobs=jobs)
    groups = _medians(rows, lambda row: row.k // (2 * n))
    med = [float(np.median([row.rounds_to_success for row in groups[b]])) for b in blocks]
    success = [float(np.mean([not row.censored for row in groups[b]])) for b in blocks]
    ratio = med[0] / med[-1]
    nonincreasing = all(a >= b for a, b in zip(med, med[1:]))
    ok = nonincreasing and 1.5 <= ratio <= 6 and min(success) >= 0.9
    return CheckResult("round-scaling", ok, len(rows),
                       {"median_rounds": med, "success_rate": success, "ratio": ratio,
                        "nonincreasing": nonincreasing})


@_timed
def check_spectral_lra(n: int = 128, alpha: float = 30.0, block: int = 2, seeds: int = 100,
                       max_rounds: int = 15, jobs: int = 1, base_seed: int = 0) -> CheckResult:
    cfg = ExperimentConfig(n=[n], r=[1], alpha=[alpha], block=[block], algorithm=["block_krylov"],
                           seeds=seeds, base_seed=base_seed, round_budget=max_rounds, criterion="spectral-lra")
    rows = run(cfg, jobs=jobs)
    wins = sum(not row.censored for row in rows)
    return CheckResult("spectral-lra", wins >= math.ceil(0.95 * seeds), seeds,
                       {"successes": wins, "median_rounds": float(np.median([r.rounds_to_success for r in rows]))})


@_timed
def check_nonadaptive_wall(n: int = 64, alpha: float = 30.0, seeds: int = 100, jobs: int = 1,
                           base_seed: int = 0) -> CheckResult:
    # at n = 64, 4n and n^2/16 coincide
    grid = sorted({n, 4 * n, n * n // 16, n * n // 4, n * n})
    cfg = ExperimentConfig(n=[n], r=[1], alpha=[alpha], block=grid, algorithm=["nonadaptive"],
                           seeds=seeds, base_seed=base_seed, round_budget=1, c=0.01)
    rows = run(cfg, jobs=jobs)
    groups = _medians(rows, lambda row: row.k)
    rate = [float(np.mean([not row.censored for row in groups[m]])) for m in grid]
    fail_4n = sum(row.censored for row in groups[4 * n])
    full = sum(not row.censored for row in groups[n * n])
    monotone = all(a <= b for a, b in zip(rate, rate[1:]))
    ok = fail_4n >= math.ceil(0.95 * seeds) and full == seeds and monotone
    return CheckResult("nonadaptive-wall", ok, len(rows),
                       {"m_grid": grid, "success_rate": rate, "failures_at_4n": fail_4n,
                        "successes_at_n2": full})


@_timed
def check_regression(n: int = 64, alpha: float = 40.0, seeds: int = 50, base_seed: int = 0) -> CheckResult:
    ratios = []
    eye = np.eye(n)
    for s in range(base_seed, base_seed + seeds):
        B = gen_planted(n, 1, alpha, s).observed
        opt = float(singular_values(B)[1])
        X, V = reduced_rank_regression(eye, B, 1, opt, seed=s)
        ratios.append(norm(X @ V.T - B, "spectral") / opt)
    return CheckResult("reduced-rank-regression", max(ratios) <= 6.0, seeds,
                       {"max_ratio": max(ratios), "median_ratio": float(np.median(ratios))})


SUITES = {
    "tail": [check_tail],
    "kl": [check_kl],
    "fano": [check_fano_trivial, check_fano],
    "norms": [check_gaussian_norms, check_symmetrization, check_eckart_young],
    "equivalence": [check_equivalence, check_information_mean],
}


def verify(suite: str) -> list[CheckResult]:
    if suite == "all":
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES) + ['all']}")
    return [check() for name in names for check in SUITES[name]]

