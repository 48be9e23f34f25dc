"""Recovery algorithms written purely against the Oracle interface.

None of these functions reads ground truth.  Scoring against the instance
happens afterwards in ``score`` / ``evaluate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import (best_rank, left_block_queries, norm, orthonormal_columns, right_block_queries,
                     rotation_rows, singular_values, truncated_svd)
from .oracle import BudgetExhausted, Oracle, open_session

SUCCESS_C = 0.01
RRR_K = 100.0
RRR_EPS_FLOOR = 1e-24

RoundHook = Callable[[int, np.ndarray], bool]


class AlgorithmError(ValueError):
    pass


class SingularSystem(AlgorithmError):
    pass


class NotConverged(AlgorithmError):
    pass


@dataclass
class RecoveryResult:
    estimate: np.ndarray
    rounds_used: int
    measurements_used: int
    target_rank: int
    info_trace: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    partial: bool = False
    vectors: tuple | None = None


def _query(oracle: Oracle, batch) -> np.ndarray:
    # exact mode tolerates overlap with history; noisy mode needs consistent re-measurement
    if oracle.mode == "exact":
        return oracle.measure(batch)
    return oracle.measure_rows(batch)


def _close_round(oracle: Oracle) -> None:
    if oracle.rounds_used > oracle.rounds_completed:
        oracle.end_round()


def _result(oracle: Oracle, estimate, r: int, partial: bool) -> RecoveryResult:
    return RecoveryResult(estimate=estimate, rounds_used=oracle.rounds_completed,
                          measurements_used=oracle.measurements_used, target_rank=r,
                          info_trace=[t.information_after for t in oracle.transcripts], partial=partial)


def _random_basis(n: int, block: int, seed) -> np.ndarray:
    return orthonormal_columns(np.random.default_rng(seed).standard_normal((n, block)))


def _project_estimate(W: np.ndarray, WtA: np.ndarray, r: int) -> np.ndarray:
    """[W W^T A]_r = W [W^T A]_r for orthonormal W."""
    rank = min(r, *WtA.shape)
    return W @ best_rank(WtA, rank)


def _left_sketch(oracle: Oracle, Z: np.ndarray) -> np.ndarray:
    n = oracle.dim
    return _query(oracle, right_block_queries(Z)).reshape(n, Z.shape[1])


def _right_sketch(oracle: Oracle, W: np.ndarray) -> np.ndarray:
    n = oracle.dim
    return _query(oracle, left_block_queries(W)).reshape(W.shape[1], n)


def subspace_iteration(oracle: Oracle, block: int, max_rounds: int, target_rank: int, seed=0,
                       on_round: RoundHook | None = None) -> RecoveryResult:
    """Alternate Y = A Z and X = A^T W, one round per alternation (2 n block rows)."""
    if block < target_rank:
        raise AlgorithmError(f"block {block} is smaller than target rank {target_rank}")
    n = oracle.dim
    Z = _random_basis(n, block, seed)
    estimate = np.zeros((n, n))
    partial = False
    for t in range(1, max_rounds + 1):
        try:
            W = orthonormal_columns(_left_sketch(oracle, Z))
            if W.shape[1] == 0:
                _close_round(oracle)
                break
            WtA = _right_sketch(oracle, W)
        except BudgetExhausted:
            partial = True
            _close_round(oracle)
            break
        oracle.end_round()
        estimate = _project_estimate(W, WtA, target_rank)
        Z = orthonormal_columns(WtA.T)
        if on_round is not None and on_round(t, estimate):
            break
        if Z.shape[1] == 0:
            break
    return _result(oracle, estimate, target_rank, partial)


def block_krylov(oracle: Oracle, block: int, depth: int, target_rank: int, seed=0,
                 on_round: RoundHook | None = None) -> RecoveryResult:
    """Grow span{A P, (A A^T) A P, ..., (A A^T)^depth A P}; one round per product.

    Each round measures one new column block Q_j and the rows Q_j^T A, so the
    best rank-r approximation inside the whole span comes for free.  Round 1
    matches the first subspace-iteration round for the same seed, and depth 0
    is plain sketch-and-truncate.
    """
    if block < target_rank:
        raise AlgorithmError(f"block {block} is smaller than target rank {target_rank}")
    n = oracle.dim
    Z = _random_basis(n, block, seed)
    Q = np.zeros((n, 0))
    QtA = np.zeros((0, n))
    estimate = np.zeros((n, n))
    partial = False
    for t in range(1, depth + 2):
        try:
            Qj = orthonormal_columns(_left_sketch(oracle, Z), against=Q)
            if Qj.shape[1] == 0:
                _close_round(oracle)
                break
            QjA = _right_sketch(oracle, Qj)
        except BudgetExhausted:
            partial = True
            _close_round(oracle)
            break
        oracle.end_round()
        Q = np.hstack([Q, Qj])
        QtA = np.vstack([QtA, QjA])
        estimate = _project_estimate(Q, QtA, target_rank)
        Z = orthonormal_columns(QjA.T)
        if on_round is not None and on_round(t, estimate):
            break
        if Z.shape[1] == 0:
            break
    return _result(oracle, estimate, target_rank, partial)


def nonadaptive_baseline(oracle: Oracle, m: int, target_rank: int, seed=0) -> RecoveryResult:
    """Measure m rows of a seeded random rotation once and truncate R^T y to rank r."""
    n = oracle.dim
    if not 0 <= m <= n * n:
        raise AlgorithmError(f"m must lie in [0, {n * n}], got {m}")
    if m == 0:
        return _result(oracle, np.zeros((n, n)), target_rank, False)
    batch = rotation_rows(n * n, m, seed)
    y = oracle.measure(batch)
    oracle.end_round()
    rough = (batch.rows.T @ y).reshape(n, n)
    return _result(oracle, best_rank(rough, target_rank), target_rank, False)


def rank1_extract(oracle: Oracle, basis: np.ndarray, alpha: float, known_components=None) -> np.ndarray:
    """Estimate u_1 v_1^T from M Q for an orthonormal n x r basis Q of the plant's row space.

    ``known_components`` lists (u_i, v_i) for i >= 2; as in the reduction,
    those parts of the plant are simulated by the caller and are subtracted
    before truncating, so only the unknown first component remains.
    """
    Q = np.atleast_2d(np.asarray(basis, dtype=np.float64))
    if Q.shape[0] != oracle.dim:
        raise AlgorithmError(f"basis has {Q.shape[0]} rows, expected {oracle.dim}")
    if np.abs(Q.T @ Q - np.eye(Q.shape[1])).max() > 1e-8:
        raise AlgorithmError("basis columns are not orthonormal")
    if alpha <= 0:
        raise AlgorithmError("alpha must be positive")
    n = oracle.dim
    MQ = _left_sketch(oracle, Q)
    _close_round(oracle)
    scale = alpha / math.sqrt(n)
    for u, v in known_components or []:
        MQ = MQ - scale * np.outer(u, v @ Q)
    return best_rank(MQ @ Q.T, 1) * (math.sqrt(n) / alpha)


# -- reduced-rank regression -----------------------------------------------------

class MatrixSource:
    """Minimal instance wrapper so a bare matrix can back an exact-mode oracle."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.dim = self.matrix.shape[0]

    @property
    def plant(self):
        return self.matrix

    @property
    def background(self):
        return np.zeros_like(self.matrix)

    @property
    def observed(self):
        return self.matrix

    @property
    def components(self):
        return []


def _cgls(A: np.ndarray, Bt: np.ndarray, tol_sq: float, sigma_min: float, max_iter: int):
    """Conjugate gradients on A^T A X = A^T Bt, all columns at once.

    Stops once the certified bound ||A (X - X*)||_F <= ||A^T R||_F / sigma_min(A)
    falls to sqrt(tol_sq).
    """
    X = np.zeros((A.shape[1], Bt.shape[1]))
    R = Bt.copy()
    S = A.T @ R
    P = S.copy()
    gamma = np.sum(S * S, axis=0)
    for it in range(max_iter + 1):
        if np.sum(gamma) / sigma_min ** 2 <= tol_sq:
            return X, it
        if it == max_iter:
            break
        AP = A @ P
        denom = np.sum(AP * AP, axis=0)
        step = np.divide(gamma, denom, out=np.zeros_like(gamma), where=denom > 0)
        X += P * step
        R -= AP * step
        S = A.T @ R
        new_gamma = np.sum(S * S, axis=0)
        beta = np.divide(new_gamma, gamma, out=np.zeros_like(gamma), where=gamma > 0)
        P = S + P * beta
        gamma = new_gamma
    raise NotConverged(f"regression did not reach tolerance in {max_iter} iterations")


def reduced_rank_regression(A, B, r: int, opt_hint: float, k_rr: float = RRR_K, block: int | None = None,
                            depth: int | None = None, seed=0, max_iter: int | None = None):
    """Rank-r X minimising ||A X - B||_2, returned as factors (X_tilde, V) with X = X_tilde V^T.

    A rank-r P' close to B in spectral norm is found by block Krylov on B;
    then A X_tilde ~ U Sigma (P' = U Sigma V^T) is solved by conjugate
    gradients to squared relative accuracy (opt_hint / ||P'||)^2 / (k_rr r).
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    n = B.shape[0]
    s = singular_values(A)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise SingularSystem("coefficient matrix is numerically singular")
    block = block or max(2, r)
    depth = depth if depth is not None else max(1, math.ceil(math.log(n)))
    oracle = open_session(MatrixSource(B), "exact", round_budget=depth + 1)
    P_prime = block_krylov(oracle, block, depth, r, seed=seed).estimate
    svd = truncated_svd(P_prime, r)
    US = svd.left * svd.values
    p_norm = float(svd.values[0])
    eps = RRR_EPS_FLOOR if p_norm == 0 else max((opt_hint / p_norm) ** 2 / (k_rr * r), RRR_EPS_FLOOR)
    tol_sq = eps * float(np.sum(US * US))
    X, _ = _cgls(A, US, tol_sq, float(s[-1]), max_iter or 10 * n)
    return X, svd.right


# -- scoring ---------------------------------------------------------------------

def score(result: RecoveryResult, inst) -> RecoveryResult:
    """Fill ``result.errors`` with ground-truth metrics (done outside the algorithm)."""
    P = np.asarray(inst.plant)
    M = np.asarray(inst.observed)
    E = result.estimate
    pn = float(np.sum(P * P))
    result.errors = {
        "relative_frobenius": float(np.sum((E - P) ** 2)) / pn if pn > 0 else float(np.sum(E * E)),
        "spectral_vs_observed": norm(M - E, "spectral"),
    }
    return result


def _top_pair(E: np.ndarray):
    svd = truncated_svd(E, 1)
    return svd.left[:, 0], svd.right[:, 0]


def evaluate(result: RecoveryResult, inst, criterion: str, **params) -> tuple[bool, dict]:
    """Check one recovery predicate against the full SVD of ``inst.observed``.

    criteria and parameters:
      plant-frobenius  c=0.01           ||E - P||_F^2 <= c ||P||_F^2
      spectral-lra     factor=2         ||M - E||_2 <= factor sigma_{r+1}(M)
      frobenius-lra    factor=1+1/n     ||M - E||_F^2 <= factor sum_{i>r} sigma_i^2
      schatten-lra     p, factor=2      ||M - E||_Sp <= factor ||M - [M]_r||_Sp
      kyfan-lra        p, factor=2      same with the Ky-Fan p norm
      singular-pair    i=1, tol=0.1     both unit vectors within tol of the i-th pair
    """
    E = np.asarray(result.estimate)
    M = np.asarray(inst.observed)
    r = result.target_rank
    n = M.shape[0]
    if criterion == "plant-frobenius":
        c = params.get("c", SUCCESS_C)
        P = np.asarray(inst.plant)
        err = float(np.sum((E - P) ** 2))
        ref = float(np.sum(P * P))
        return err <= c * ref, {"error": err, "reference": ref, "ratio": err / ref if ref else math.inf}
    if criterion in ("spectral-lra", "frobenius-lra", "schatten-lra", "kyfan-lra"):
        s = singular_values(M)
        D = M - E
        if criterion == "spectral-lra":
            factor = params.get("factor", 2.0)
            lhs, opt = norm(D, "spectral"), float(s[r]) if r < s.size else 0.0
        elif criterion == "frobenius-lra":
            factor = params.get("factor", 1.0 + 1.0 / n)
            lhs, opt = float(np.sum(D * D)), float(np.sum(s[r:] ** 2))
        else:
            p = params["p"]
            factor = params.get("factor", 2.0)
            kind = "schatten" if criterion == "schatten-lra" else "kyfan"
            tail = s[r:]
            lhs = norm(D, kind, p)
            if kind == "schatten":
                opt = float(np.sum(tail ** p) ** (1.0 / p))
            else:
                opt = float(np.sum(tail[: int(p)]))
        ok = lhs <= factor * opt * (1 + 1e-12)
        return ok, {"lhs": lhs, "opt": opt, "ratio": lhs / opt if opt else math.inf}
    if criterion == "singular-pair":
        i = params.get("i", 1)
        tol = params.get("tol", 0.1)
        U, _, Vt = np.linalg.svd(M)
        u_true, v_true = U[:, i - 1], Vt[i - 1]
        u_hat, v_hat = result.vectors if result.vectors is not None else _top_pair(E)
        u_hat = u_hat / np.linalg.norm(u_hat)
        v_hat = v_hat / np.linalg.norm(v_hat)
        sgn = 1.0 if u_hat @ u_true >= 0 else -1.0
        du = float(np.linalg.norm(u_hat - sgn * u_true))
        dv = float(np.linalg.norm(v_hat - sgn * v_true))
        return (du <= tol and dv <= tol), {"left_distance": du, "right_distance": dv,
                                            "left_alignment": abs(float(u_hat @ u_true)),
                                            "right_alignment": abs(float(v_hat @ v_true))}
    raise AlgorithmError(f"unknown criterion {criterion!r}")
