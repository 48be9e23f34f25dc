"""Numeric side of the round lower bound: the f_j schedule, round-count
formulas, Monte Carlo checks of the tail bound, KL identities and a
finite-instance Fano checker."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .linalg import random_orthonormal_rows

TAIL_GRID = (4.0, 6.0, 8.0, 12.0, 16.0)


class TheoryError(ValueError):
    pass


# -- schedule and round formulas ---------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    K: float
    alpha: float
    gamma: float
    values: tuple

    @property
    def ratio(self) -> float:
        return self.K * self.alpha ** 2 * self.gamma ** 2


def f_schedule(K: float, alpha: float, gamma: float, t: int) -> Schedule:
    """f_0 = K and f_j = K alpha^2 gamma^2 f_{j-1}, by repeated multiplication."""
    if K <= 0 or alpha <= 0 or gamma <= 0:
        raise TheoryError("K, alpha and gamma must be positive")
    if t < 0:
        raise TheoryError("t must be nonnegative")
    ratio = K * alpha ** 2 * gamma ** 2
    vals = [float(K)]
    for _ in range(t):
        vals.append(vals[-1] * ratio)
    return Schedule(float(K), float(alpha), float(gamma), tuple(vals))


def last_valid_round(n: int, k: int, K: float, alpha: float, gamma: float) -> int:
    """Largest t with f_t k <= 16 n^2, or -1 if even f_0 overshoots."""
    cap = 16 * n ** 2
    f = float(K)
    t = -1
    ratio = K * alpha ** 2 * gamma ** 2
    while f * k <= cap:
        t += 1
        if ratio <= 1:
            raise TheoryError("schedule does not grow; every round is valid")
        f *= ratio
    return t


def lb_rounds(n: int, k: int, c: float = 1.0, variant: str = "const-prob", p: float | None = None) -> float:
    """Round lower bounds with explicit constant c, natural logs throughout.

    const-prob   c log(n^2/k) / log log n
    high-prob    c log(n^2/k)
    schatten     c log(n^2/k) / ((1/p) log n + log log n)
    kyfan        c log(n^2/k) / (log p + log log n)
    """
    if k < 1:
        raise TheoryError("k must be >= 1")
    if n < 3:
        raise TheoryError("n must be >= 3 so that log log n > 0")
    num = c * max(math.log(n * n / k), 0.0)
    loglog = math.log(math.log(n))
    if variant == "const-prob":
        return num / loglog
    if variant == "high-prob":
        return num
    if variant == "schatten":
        if p is None or p < 2:
            raise TheoryError(f"Schatten variant needs p >= 2, got {p}")
        return num / (math.log(n) / p + loglog)
    if variant == "kyfan":
        if p is None or p < 1 or p > n:
            raise TheoryError(f"Ky-Fan variant needs 1 <= p <= n, got {p}")
        return num / (math.log(p) + loglog)
    raise TheoryError(f"unknown variant {variant!r}")


# -- tail bound Monte Carlo --------------------------------------------------------

@dataclass
class TailEstimate:
    C: np.ndarray
    probability: np.ndarray
    counts: np.ndarray
    trials: int
    beta: float
    intercept: float
    correlation: float
    fitted_points: int


def tail_samples(n: int, k: int, trials: int, seed, kind: str = "kron") -> np.ndarray:
    """Draws of ||Q (u (x) v)||^2 for one fixed Q and fresh Gaussian (u, v).

    ``kind="kron"`` fixes Q = kron(L, I) with L a Haar-random (k/n) x n block,
    so the statistic is ||L u||^2 ||v||^2.  ``kind="haar"`` fixes a dense
    Haar-random k x n^2 Q.
    """
    rng = np.random.default_rng(seed)
    if kind == "kron":
        if k % n:
            raise TheoryError("kron tail samples need n to divide k")
        L = random_orthonormal_rows(k // n, n, rng)
        u = rng.standard_normal((trials, n))
        v = rng.standard_normal((trials, n))
        return np.sum((u @ L.T) ** 2, axis=1) * np.sum(v * v, axis=1)
    if kind == "haar":
        Q = random_orthonormal_rows(k, n * n, rng).reshape(k, n, n)
        out = np.empty(trials)
        chunk = max(1, 2 ** 22 // (k * n))
        for lo in range(0, trials, chunk):
            u = rng.standard_normal((min(chunk, trials - lo), n))
            v = rng.standard_normal((u.shape[0], n))
            proj = np.einsum("kij,ti,tj->tk", Q, u, v, optimize=True)
            out[lo:lo + u.shape[0]] = np.sum(proj ** 2, axis=1)
        return out
    raise TheoryError(f"unknown Q kind {kind!r}")


def tail_probability_mc(n: int, k: int, C=TAIL_GRID, trials: int = 10_000, seed=0,
                        kind: str = "kron") -> TailEstimate:
    """Empirical Pr[||Q(u (x) v)||^2 >= C k] over a grid of C, with a log-linear fit.

    The same draws serve every C, so the estimates are monotone in C.  beta
    is minus the slope of log-probability against C k / n, fitted over grid
    points with at least one exceedance.
    """
    C = np.atleast_1d(np.asarray(C, dtype=np.float64))
    if k < n:
        raise TheoryError(f"need k >= n, got k={k}, n={n}")
    if np.any(C < 4) or np.any(C * k > 16 * n * n):
        raise TheoryError(f"C must satisfy 4 <= C and C k <= 16 n^2, got {C.tolist()}")
    x = tail_samples(n, k, trials, seed, kind)
    counts = np.array([int(np.sum(x >= c * k)) for c in C])
    prob = counts / trials
    mask = counts > 0
    beta = intercept = corr = float("nan")
    if mask.sum() >= 2:
        z = C[mask] * k / n
        logp = np.log(prob[mask])
        slope, intercept = np.polyfit(z, logp, 1)
        beta = -float(slope)
        corr = float(np.corrcoef(z, logp)[0, 1]) if mask.sum() >= 3 else -1.0 if slope < 0 else 1.0
    return TailEstimate(C, prob, counts, trials, beta, float(intercept), corr, int(mask.sum()))


def information_mean_mc(n: int, k: int, draws: int = 1000, seed=0, kind: str = "haar") -> np.ndarray:
    """Samples of ||Q(u (x) v)||^2 for a fixed random orthonormal Q; their mean should be k."""
    return tail_samples(n, k, draws, seed, kind)


# -- KL divergences ---------------------------------------------------------------

def kl_gaussian_identity(mu1, mu2) -> float:
    """KL(N(mu1, I) || N(mu2, I)) = |mu1 - mu2|^2 / 2."""
    mu1 = np.asarray(mu1, dtype=np.float64)
    mu2 = np.asarray(mu2, dtype=np.float64)
    if mu1.shape != mu2.shape:
        raise TheoryError(f"mean shapes differ: {mu1.shape} vs {mu2.shape}")
    d = mu1 - mu2
    return 0.5 * float(d @ d)


def kl_gaussian(mu1, cov1, mu2, cov2) -> float:
    """KL(N(mu1, cov1) || N(mu2, cov2)) for general positive definite covariances."""
    mu1 = np.asarray(mu1, dtype=np.float64)
    mu2 = np.asarray(mu2, dtype=np.float64)
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    d = mu1.size
    if mu2.size != d or cov1.shape != (d, d) or cov2.shape != (d, d):
        raise TheoryError("dimension mismatch")
    _, logdet1 = np.linalg.slogdet(cov1)
    _, logdet2 = np.linalg.slogdet(cov2)
    diff = mu2 - mu1
    trace = float(np.trace(np.linalg.solve(cov2, cov1)))
    quad = float(diff @ np.linalg.solve(cov2, diff))
    return 0.5 * (logdet2 - logdet1 + trace + quad - d)


def kl_discrete(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise TheoryError("distributions must share an outcome set")
    supp = p > 0
    if np.any(q[supp] <= 0):
        return math.inf
    return float(np.sum(p[supp] * np.log(p[supp] / q[supp])))


def kl_conditioning_check(p, q, event) -> tuple[float, float, bool]:
    """Compare KL(p|E || q) with (KL(p || q) + 2) / p(E)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    mask = np.zeros(p.shape, dtype=bool)
    mask[np.asarray(list(event), dtype=int)] = True
    pe = float(p[mask].sum())
    if pe <= 0:
        raise TheoryError("event has zero probability under p")
    p_cond = np.where(mask, p, 0.0) / pe
    lhs = kl_discrete(p_cond, q)
    rhs = (kl_discrete(p, q) + 2.0) / pe
    return lhs, rhs, bool(lhs <= rhs + 1e-12)


def kl_chain_check(joint_p, q_x, q_y) -> tuple[float, float]:
    """Both sides of KL((X,Y) || (Z,W)) = KL(X||Z) + E_X KL(Y|X || W) for independent (Z, W)."""
    P = np.asarray(joint_p, dtype=np.float64)
    q_x = np.asarray(q_x, dtype=np.float64)
    q_y = np.asarray(q_y, dtype=np.float64)
    lhs = kl_discrete(P.ravel(), np.outer(q_x, q_y).ravel())
    px = P.sum(axis=1)
    rhs = kl_discrete(px, q_x)
    for i, w in enumerate(px):
        if w > 0:
            rhs += w * kl_discrete(P[i] / w, q_y)
    return lhs, rhs


def random_kl_instance(rng: np.random.Generator, max_outcomes: int = 16):
    """Random (p, q, event) with p absolutely continuous wrt q and p(event) > 0."""
    m = int(rng.integers(2, max_outcomes + 1))
    q = rng.dirichlet(np.ones(m))
    p = rng.dirichlet(np.full(m, 0.5))
    zero = rng.random(m) < 0.2
    if zero.all():
        zero[0] = False
    p = np.where(zero, 0.0, p)
    p /= p.sum()
    while True:
        event = np.flatnonzero(rng.random(m) < 0.5)
        if event.size and p[event].sum() > 0:
            return p, q, event


# -- generalized Fano ---------------------------------------------------------------

@dataclass
class FanoCheck:
    prior: np.ndarray
    channels: np.ndarray
    loss: np.ndarray

    def __post_init__(self):
        self.prior = np.asarray(self.prior, dtype=np.float64)
        self.channels = np.atleast_2d(np.asarray(self.channels, dtype=np.float64))
        self.loss = np.atleast_2d(np.asarray(self.loss, dtype=np.float64))
        m = self.prior.size
        if self.channels.shape[0] != m or self.loss.shape[0] != m:
            raise TheoryError("prior, channels and loss must agree on the number of parameters")
        if np.any(self.prior < 0) or abs(self.prior.sum() - 1) > 1e-12:
            raise TheoryError("prior must be a probability vector")
        if np.any(self.channels < 0) or np.any(np.abs(self.channels.sum(axis=1) - 1) > 1e-12):
            raise TheoryError("each channel must be a probability vector")
        if not np.all((self.loss == 0) | (self.loss == 1)):
            raise TheoryError("loss must be 0-1 valued")


@dataclass
class FanoResult:
    r_bayes: float
    r0: float
    mutual_information: float
    bound: float
    holds: bool


def bayes_risk_pointwise(fc: FanoCheck) -> float:
    """Pick the best action separately for each outcome."""
    joint = fc.prior[:, None] * fc.channels           # theta x outcome
    risk_by_action = joint.T @ fc.loss                # outcome x action
    return float(risk_by_action.min(axis=1).sum())


def bayes_risk_enumerated(fc: FanoCheck) -> float:
    """Minimum risk over every deterministic map outcome -> action."""
    joint = fc.prior[:, None] * fc.channels
    per = joint.T @ fc.loss                           # outcome x action
    n_out, n_act = per.shape
    best = math.inf
    for rule in itertools.product(range(n_act), repeat=n_out):
        best = min(best, float(per[np.arange(n_out), rule].sum()))
    return best


def fano_bound(fc: FanoCheck, method: str = "auto") -> FanoResult:
    """Exact Bayes risk next to 1 + (I + log(1 + R0)) / log(1 - R0).

    R0 is the best risk without observations, and I is the mutual information
    sum_theta w_theta KL(P_theta || mixture).
    """
    r0 = float((fc.prior @ fc.loss).min())
    if r0 >= 1.0:
        raise TheoryError("R0 = 1 makes log(1 - R0) diverge")
    n_out, n_act = fc.channels.shape[1], fc.loss.shape[1]
    if method == "enumerate" or (method == "auto" and n_act ** n_out <= 100_000):
        r_bayes = bayes_risk_enumerated(fc)
    else:
        r_bayes = bayes_risk_pointwise(fc)
    mixture = fc.prior @ fc.channels
    info = float(sum(w * kl_discrete(P, mixture) for w, P in zip(fc.prior, fc.channels) if w > 0))
    if r0 == 0.0:
        bound = -math.inf
    else:
        bound = 1.0 + (info + math.log1p(r0)) / math.log1p(-r0)
    return FanoResult(r_bayes, r0, info, bound, bool(r_bayes >= bound - 1e-10))


def random_fano_check(rng: np.random.Generator, max_params: int = 4, max_outcomes: int = 6,
                      max_actions: int = 4) -> FanoCheck:
    while True:
        m = int(rng.integers(2, max_params + 1))
        o = int(rng.integers(2, max_outcomes + 1))
        a = int(rng.integers(2, max_actions + 1))
        prior = rng.dirichlet(np.ones(m))
        channels = rng.dirichlet(np.full(o, 0.7), size=m)
        loss = (rng.random((m, a)) < 0.5).astype(float)
        fc = FanoCheck(prior, channels, loss)
        if float((prior @ loss).min()) < 1.0:
            return fc


# -- growth of the information trace ----------------------------------------------

@dataclass
class GrowthFit:
    factor: float
    residual: float
    points_used: int
    plateau_start: int | None


def growth_rate(info_trace, plateau_tol: float = 1e-3) -> GrowthFit:
    """exp(slope) of a least-squares fit of log(information) against round index.

    Once the round-to-round ratio drops below 1 + plateau_tol the trace is
    treated as saturated and the rest is left out of the fit, unless the
    trace never grows at all.
    """
    y = np.asarray(info_trace, dtype=np.float64)
    if y.size < 3:
        raise TheoryError("need at least 3 trace entries")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise TheoryError("trace entries must be positive")
    ratios = y[1:] / y[:-1]
    flat = np.flatnonzero(ratios < 1 + plateau_tol)
    plateau = int(flat[0]) + 1 if flat.size else None
    use = y if plateau is None or plateau < 2 else y[:plateau]
    idx = np.arange(use.size)
    slope, icpt = np.polyfit(idx, np.log(use), 1)
    resid = float(np.sqrt(np.mean((np.log(use) - (slope * idx + icpt)) ** 2)))
    return GrowthFit(float(np.exp(slope)), resid, int(use.size), plateau)
