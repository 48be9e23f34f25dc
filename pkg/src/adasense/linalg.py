"""Dense kernels: orthonormalisation, truncated SVD, matrix norms and the
query constructions that turn matrix-vector products into linear measurements."""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .queries import BatchError, DenseBatch, KronBatch

DROP_TOL = 1e-10
DENSE_SPECTRAL_LIMIT = 512


class EmptyBatch(BatchError):
    """Every input row was numerically inside the span being projected out."""


class Orthonormalized(NamedTuple):
    batch: DenseBatch
    rank: int
    dropped: list[int]


class SVDTriple(NamedTuple):
    left: np.ndarray
    values: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.values) @ self.right.T


def _history_rows(against) -> np.ndarray | None:
    if against is None:
        return None
    if isinstance(against, (DenseBatch, KronBatch)):
        against = [against]
    if isinstance(against, (list, tuple)) and against and isinstance(against[0], (DenseBatch, KronBatch)):
        return np.vstack([b.to_dense() for b in against])
    H = np.atleast_2d(np.asarray(against, dtype=np.float64))
    return H if H.size else None


def orthonormalize(rows, against=None) -> Orthonormalized:
    """Gram-Schmidt with a second full pass, row by row.

    Each row is projected off ``against`` (orthonormal rows) and off the rows
    already accepted, twice.  Rows whose residual falls below ``1e-10`` times
    their input norm are dropped and their indices reported.
    """
    R = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if not np.all(np.isfinite(R)):
        raise BatchError("rows must be finite")
    H = _history_rows(against)
    out = np.empty_like(R)
    m = 0
    dropped = []
    for i, row in enumerate(R):
        nrm0 = np.linalg.norm(row)
        if nrm0 == 0.0:
            dropped.append(i)
            continue
        w = row.copy()
        for _ in range(2):
            if H is not None:
                w -= (H @ w) @ H
            if m:
                Q = out[:m]
                w -= (Q @ w) @ Q
        nrm = np.linalg.norm(w)
        if nrm < DROP_TOL * nrm0:
            dropped.append(i)
            continue
        out[m] = w / nrm
        m += 1
    if m == 0:
        raise EmptyBatch("all rows are degenerate")
    return Orthonormalized(DenseBatch(out[:m]), m, dropped)


def orthonormal_columns(Y: np.ndarray, against: np.ndarray | None = None) -> np.ndarray:
    """Orthonormal basis (columns) for range(Y) minus range(against), via two QR passes."""
    Y = np.array(Y, dtype=np.float64, copy=True)
    for _ in range(2):
        if against is not None and against.size:
            Y -= against @ (against.T @ Y)
        Q, R = np.linalg.qr(Y)
        Y = Q
    keep = np.abs(np.diag(R)) > DROP_TOL * max(1.0, np.abs(R).max())
    return Q[:, keep]


def _fix_signs(left: np.ndarray, right: np.ndarray) -> None:
    # largest-magnitude entry of each left factor made nonnegative; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(left), axis=0)
    signs = np.sign(left[idx, np.arange(left.shape[1])])
    signs[signs == 0] = 1.0
    left *= signs
    right *= signs


def truncated_svd(A: np.ndarray, r: int) -> SVDTriple:
    A = np.asarray(A, dtype=np.float64)
    if not 1 <= r <= min(A.shape):
        raise ValueError(f"rank {r} out of range for shape {A.shape}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    left = U[:, :r].copy()
    right = Vt[:r].T.copy()
    _fix_signs(left, right)
    return SVDTriple(left, s[:r].copy(), right)


def best_rank(A: np.ndarray, r: int) -> np.ndarray:
    """[A]_r, the Eckart-Young truncation."""
    if r == 0:
        return np.zeros_like(np.asarray(A, dtype=np.float64))
    return truncated_svd(A, r).reconstruct()


def singular_values(A: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(A, dtype=np.float64), compute_uv=False)


def spectral_norm(A: np.ndarray) -> float:
    A = np.asarray(A, dtype=np.float64)
    if max(A.shape) <= DENSE_SPECTRAL_LIMIT:
        return float(np.linalg.norm(A, 2))
    from scipy.sparse.linalg import svds
    return float(svds(A, k=1, return_singular_vectors=False, tol=1e-10)[0])


def norm(A: np.ndarray, kind: str = "spectral", p: float | None = None) -> float:
    """Spectral, Frobenius, Schatten-p ((sum s_i^p)^(1/p), p >= 2) or Ky-Fan-p (sum of the top p)."""
    A = np.asarray(A, dtype=np.float64)
    if kind == "spectral":
        return spectral_norm(A)
    if kind == "frobenius":
        return float(np.linalg.norm(A))
    s = singular_values(A)
    if kind == "schatten":
        if p is None or not p >= 2:
            raise ValueError(f"Schatten norm needs p >= 2, got {p}")
        if s[0] == 0.0:
            return 0.0
        # factor out s_1 to keep large p from overflowing
        return float(s[0] * np.sum((s / s[0]) ** p) ** (1.0 / p))
    if kind == "kyfan":
        if p is None or int(p) != p or not 1 <= p <= s.size:
            raise ValueError(f"Ky-Fan norm needs an integer 1 <= p <= {s.size}, got {p}")
        return float(np.sum(s[: int(p)]))
    raise ValueError(f"unknown norm kind {kind!r}")


# -- queries for matrix-vector products ------------------------------------------

def matvec_queries(v: np.ndarray) -> KronBatch:
    """The n rows e_i (x) v/|v|; their responses are A v / |v|."""
    v = np.asarray(v, dtype=np.float64).ravel()
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("matvec_queries needs a nonzero vector")
    return KronBatch(np.eye(v.size), v[None, :] / nrm)


def assemble_matvec(responses: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Scale responses of ``matvec_queries(v)`` back to A v."""
    return np.asarray(responses) * np.linalg.norm(v)


def right_block_queries(Z: np.ndarray) -> KronBatch:
    """Rows e_i (x) z_j for orthonormal columns z_j; responses reshape to A Z (n x b)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    return KronBatch(np.eye(Z.shape[0]), Z.T)


def left_block_queries(W: np.ndarray) -> KronBatch:
    """Rows w_j (x) e_i for orthonormal columns w_j; responses reshape to W^T A (b x n)."""
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    return KronBatch(W.T, np.eye(W.shape[0]))


@lru_cache(maxsize=4)
def _rotation(d: int, seed: int) -> np.ndarray:
    X = np.random.default_rng(seed).standard_normal((d, d))
    Q, R = np.linalg.qr(X)
    Q *= np.sign(np.diag(R))
    Q = np.ascontiguousarray(Q.T)
    Q.setflags(write=False)
    return Q


@lru_cache(maxsize=16)
def rotation_rows(d: int, m: int, seed: int) -> DenseBatch:
    """First ``m`` rows of a Haar-random rotation of R^d (cached per (d, seed))."""
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= {d}, got {m}")
    return DenseBatch(_rotation(d, seed)[:m])


def random_orthonormal_rows(k: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """k Haar-distributed orthonormal rows in R^d (k <= d)."""
    X = rng.standard_normal((d, k))
    Q, R = np.linalg.qr(X)
    Q *= np.sign(np.diag(R))
    return Q.T
