"""Query batches: sets of flattened n x n measurement matrices.

Rows follow the row-major convention ``vec(u v^T) = kron(u, v)``.  Two storage
forms share one interface:

* ``DenseBatch`` keeps the k x n^2 row matrix explicitly.
* ``KronBatch`` keeps factors ``left`` (a x n) and ``right`` (b x n); its rows
  are ``kron(left, right)``, i.e. row ``i * b + j`` is ``left[i] (x) right[j]``.
  Responses are ``left @ A @ right.T`` flattened, so a batch of matrix-vector
  products never materialises n^2-long rows.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np


class BatchError(ValueError):
    pass


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _max_offdiag(M: np.ndarray) -> float:
    if M.shape[0] < 2:
        return 0.0
    off = np.abs(M - np.diag(np.diag(M)))
    return float(off.max())


class DenseBatch:
    def __init__(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise BatchError("a batch needs at least one row")
        d = int(round(np.sqrt(rows.shape[1])))
        if d * d != rows.shape[1]:
            raise BatchError(f"row length {rows.shape[1]} is not a perfect square")
        if not np.all(np.isfinite(rows)):
            raise BatchError("rows must be finite")
        self.rows = _readonly(rows)
        self.dim = d

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @cached_property
    def gram_deviation(self) -> float:
        g = self.rows @ self.rows.T
        return float(np.abs(g - np.eye(self.size)).max())

    def apply(self, A: np.ndarray) -> np.ndarray:
        return self.rows @ np.asarray(A).reshape(-1)

    def project_sq(self, u: np.ndarray, v: np.ndarray) -> float:
        """Squared norm of this batch applied to ``u (x) v``."""
        return float(np.sum(self.apply(np.outer(u, v)) ** 2))

    def to_dense(self) -> np.ndarray:
        return self.rows

    def cross_max(self, other) -> float:
        """Largest |<row of self, row of other>|."""
        if isinstance(other, DenseBatch):
            return float(np.abs(self.rows @ other.rows.T).max())
        mats = self.rows.reshape(self.size, self.dim, self.dim)
        vals = np.einsum("ai,kij,bj->kab", other.left, mats, other.right, optimize=True)
        return float(np.abs(vals).max())


class KronBatch:
    def __init__(self, left, right):
        left = np.atleast_2d(np.asarray(left, dtype=np.float64))
        right = np.atleast_2d(np.asarray(right, dtype=np.float64))
        if left.shape[1] != right.shape[1]:
            raise BatchError(f"factor widths differ: {left.shape[1]} vs {right.shape[1]}")
        if left.shape[0] == 0 or right.shape[0] == 0:
            raise BatchError("a batch needs at least one row")
        if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
            raise BatchError("rows must be finite")
        self.left = _readonly(left)
        self.right = _readonly(right)
        self.dim = left.shape[1]

    @property
    def size(self) -> int:
        return self.left.shape[0] * self.right.shape[0]

    @property
    def left_full(self) -> bool:
        return self.left.shape[0] == self.dim

    @property
    def right_full(self) -> bool:
        return self.right.shape[0] == self.dim

    @cached_property
    def gram_deviation(self) -> float:
        # Gram of kron(L, R) is kron(L L^T, R R^T); bound entries without forming it.
        gl = self.left @ self.left.T
        gr = self.right @ self.right.T
        diag = np.abs(np.outer(np.diag(gl), np.diag(gr)) - 1.0).max()
        off = max(_max_offdiag(gl) * np.abs(gr).max(), np.abs(gl).max() * _max_offdiag(gr))
        return float(max(diag, off))

    def apply(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A).reshape(self.dim, self.dim)
        return (self.left @ A @ self.right.T).reshape(-1)

    def project_sq(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum((self.left @ u) ** 2) * np.sum((self.right @ v) ** 2))

    def to_dense(self) -> np.ndarray:
        return np.kron(self.left, self.right)

    def cross_max(self, other) -> float:
        if isinstance(other, KronBatch):
            return float(np.abs(self.left @ other.left.T).max() * np.abs(self.right @ other.right.T).max())
        return other.cross_max(self)


def as_batch(obj) -> DenseBatch | KronBatch:
    if isinstance(obj, (DenseBatch, KronBatch)):
        return obj
    return DenseBatch(obj)
