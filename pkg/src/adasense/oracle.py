"""Measurement sessions over a planted instance.

Two modes:

* ``noisy``: each orthonormal row q returns <q, vec(plant)> + sigma * z with
  fresh standard normal z.  Rows must be orthogonal to the whole history.
* ``exact``: each row returns <q, vec(plant + sigma * background)> with no
  randomness.  With sigma = 1 this is the instance's observed matrix.  Rows
  only need to be orthonormal within a batch, so iterative methods may touch
  the same directions again.

The two are equal in distribution for any adaptive plan whose rows stay
orthonormal across rounds; ``measure_rows`` extends noisy mode to arbitrary
rows by measuring only the part of each row outside the history and reusing
earlier responses for the rest.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .linalg import EmptyBatch, orthonormalize
from .queries import DenseBatch, KronBatch, as_batch

ORTHO_TOL = 1e-8
HISTORY_TOL = 1e-7
DENSE_INFO_LIMIT = 2 ** 24

MODES = {"noisy": "noisy", "noisy-on-A": "noisy", "exact": "exact", "exact-on-A-plus-G": "exact"}


class OracleError(ValueError):
    pass


class NonOrthonormalBatch(OracleError):
    pass


class HistoryOverlap(OracleError):
    pass


class BudgetExhausted(OracleError):
    pass


class EmptyRound(OracleError):
    pass


@dataclass
class RoundTranscript:
    round: int
    rows: int
    responses: np.ndarray = field(repr=False)
    information_after: float


class Oracle:
    def __init__(self, inst, mode: str = "exact", sigma: float = 1.0, round_budget: int = 10,
                 measurement_budget: int | None = None, seed=None):
        if mode not in MODES:
            raise OracleError(f"unknown mode {mode!r}")
        self.mode = MODES[mode]
        if not np.isfinite(sigma) or sigma < 0 or (self.mode == "noisy" and sigma == 0):
            raise OracleError(f"invalid sigma {sigma}")
        if measurement_budget is None:
            measurement_budget = inst.dim ** 2
        if round_budget < 1 or measurement_budget < 1:
            raise OracleError(f"budgets must be >= 1, got rounds={round_budget}, measurements={measurement_budget}")
        self.inst = inst
        self.dim = inst.dim
        self.sigma = float(sigma)
        self.round_budget = int(round_budget)
        self.measurement_budget = int(measurement_budget)
        self._rng = np.random.default_rng(seed)
        self._plant = np.asarray(inst.plant)
        self._matrix = None
        if self.mode == "exact":
            self._matrix = self._plant + self.sigma * np.asarray(inst.background)
        self._components = inst.components
        self.batches: list = []
        self.responses: list[np.ndarray] = []
        self.transcripts: list[RoundTranscript] = []
        self.measurements_used = 0
        self._round_rows = 0
        self._round_responses: list[np.ndarray] = []

    # -- counters --------------------------------------------------------------

    @property
    def rounds_completed(self) -> int:
        return len(self.transcripts)

    @property
    def rounds_used(self) -> int:
        """Completed rounds plus the open one, if it holds any rows."""
        return self.rounds_completed + (self._round_rows > 0)

    @property
    def measurements_left(self) -> int:
        return self.measurement_budget - self.measurements_used

    # -- measuring -------------------------------------------------------------

    def _check_budget(self, rows: int) -> None:
        if self.rounds_completed >= self.round_budget:
            raise BudgetExhausted(f"round budget {self.round_budget} used up")
        if self.measurements_used + rows > self.measurement_budget:
            raise BudgetExhausted(
                f"{rows} rows would exceed the measurement budget "
                f"({self.measurements_used}/{self.measurement_budget} used)")

    def _record(self, batch, y: np.ndarray) -> None:
        self.batches.append(batch)
        self.responses.append(y)
        self.measurements_used += batch.size
        self._round_rows += batch.size
        self._round_responses.append(y)

    def measure(self, batch) -> np.ndarray:
        batch = as_batch(batch)
        if batch.dim != self.dim:
            raise OracleError(f"batch dimension {batch.dim} does not match instance dimension {self.dim}")
        if batch.gram_deviation > ORTHO_TOL:
            raise NonOrthonormalBatch(f"batch Gram deviation {batch.gram_deviation:.3e} exceeds {ORTHO_TOL}")
        if self.mode == "noisy":
            for old in self.batches:
                overlap = batch.cross_max(old)
                if overlap > ORTHO_TOL:
                    raise HistoryOverlap(f"batch overlaps history by {overlap:.3e}")
        self._check_budget(batch.size)
        if self.mode == "exact":
            y = batch.apply(self._matrix)
        else:
            y = batch.apply(self._plant) + self.sigma * self._rng.standard_normal(batch.size)
        self._record(batch, y)
        return y.copy()

    def measure_rows(self, rows) -> np.ndarray:
        """Responses to arbitrary (not necessarily orthonormal) rows.

        Exact mode orthonormalises the rows, measures that basis and maps the
        responses back.  Noisy mode first projects the rows off the history,
        measures only the new directions and reuses recorded responses for the
        old ones, so repeated directions get consistent answers.  Only newly
        measured directions consume budget.
        """
        if isinstance(rows, (DenseBatch, KronBatch)):
            rows = rows.to_dense()
        R = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if self.mode == "exact":
            on = orthonormalize(R)
            y = self.measure(on.batch)
            return (R @ on.batch.rows.T) @ y
        out = np.zeros(R.shape[0])
        H = self.history_rows()
        if H is not None:
            out += (R @ H.T) @ np.concatenate(self.responses)
        try:
            on = orthonormalize(R, against=H)
        except EmptyBatch:
            return out
        y = self.measure(on.batch)
        return out + (R @ on.batch.rows.T) @ y

    def end_round(self) -> RoundTranscript:
        if self._round_rows == 0:
            raise EmptyRound("no measurements since the last round boundary")
        info = self.information()
        if np.isscalar(info):
            first = float(info)
        else:
            first = float(info[0]) if info.size else float("nan")
        t = RoundTranscript(self.rounds_completed + 1, self._round_rows,
                            np.concatenate(self._round_responses), first)
        self.transcripts.append(t)
        self._round_rows = 0
        self._round_responses = []
        return t

    # -- history and ground-truth instrumentation ------------------------------

    def history_rows(self) -> np.ndarray | None:
        if not self.batches:
            return None
        return np.vstack([b.to_dense() for b in self.batches])

    def history_gram_deviation(self) -> float:
        H = self.history_rows()
        if H is None:
            return 0.0
        return float(np.abs(H @ H.T - np.eye(H.shape[0])).max())

    def information(self):
        """||P_Q (u (x) v)||^2 for each planted component, Q the cumulative query span.

        Reads ground truth and consumes no budget.  A float for rank-1
        instances and an array of per-component values otherwise.
        """
        vals = np.array([self._info_one(u, v) for u, v in self._components])
        if vals.size == 0:
            return vals
        return float(vals[0]) if vals.size == 1 else vals

    def _info_one(self, u: np.ndarray, v: np.ndarray) -> float:
        if not self.batches:
            return 0.0
        total = float(u @ u) * float(v @ v)
        if self.mode == "noisy" or len(self.batches) == 1:
            # rows are mutually orthonormal, so per-batch projections add up
            return min(total, sum(b.project_sq(u, v) for b in self.batches))
        closed = _one_sided_info(self.batches, u, v)
        if closed is not None:
            return closed
        size = sum(b.size for b in self.batches)
        if size * self.dim ** 2 <= DENSE_INFO_LIMIT:
            from scipy.linalg import orth
            B = orth(self.history_rows().T)
            return float(np.sum((B.T @ np.kron(u, v)) ** 2))
        return _lsqr_info(self.batches, self.dim, u, v)

    def export_csv(self, path) -> None:
        write_transcripts(self.transcripts, path)


def _span_basis(blocks: list[np.ndarray], n: int) -> np.ndarray:
    if not blocks:
        return np.zeros((n, 0))
    from scipy.linalg import orth
    return orth(np.vstack(blocks).T)


def _one_sided_info(batches, u, v) -> float | None:
    """Closed form when every batch is kron(I, R) or kron(L, I).

    The union of R^n (x) S_R and S_L (x) R^n is the orthogonal complement of
    S_L^perp (x) S_R^perp, so the projection loses exactly
    ||P_{S_L^perp} u||^2 ||P_{S_R^perp} v||^2.
    """
    lefts, rights = [], []
    for b in batches:
        if not isinstance(b, KronBatch):
            return None
        if b.left_full:
            rights.append(b.right)
        elif b.right_full:
            lefts.append(b.left)
        else:
            return None
    n = u.shape[0]
    SL = _span_basis(lefts, n)
    SR = _span_basis(rights, n)
    u_perp = float(u @ u - np.sum((SL.T @ u) ** 2))
    v_perp = float(v @ v - np.sum((SR.T @ v) ** 2))
    return float(u @ u) * float(v @ v) - max(u_perp, 0.0) * max(v_perp, 0.0)


def _adjoint(b, y: np.ndarray) -> np.ndarray:
    if isinstance(b, KronBatch):
        Y = y.reshape(b.left.shape[0], b.right.shape[0])
        return (b.left.T @ Y @ b.right).reshape(-1)
    return b.rows.T @ y


def _lsqr_info(batches, n: int, u, v) -> float:
    from scipy.sparse.linalg import LinearOperator, lsqr
    sizes = [b.size for b in batches]
    offsets = np.cumsum([0] + sizes)

    def matvec(c):
        out = np.zeros(n * n)
        for b, lo, hi in zip(batches, offsets[:-1], offsets[1:]):
            out += _adjoint(b, c[lo:hi])
        return out

    def rmatvec(x):
        return np.concatenate([b.apply(x) for b in batches])

    op = LinearOperator((n * n, int(offsets[-1])), matvec=matvec, rmatvec=rmatvec)
    x = np.kron(u, v)
    c = lsqr(op, x, atol=1e-12, btol=1e-12, iter_lim=2000)[0]
    return float(x @ matvec(c))


def open_session(inst, mode: str = "exact", sigma: float = 1.0, round_budget: int = 10,
                 measurement_budget: int | None = None, seed=None) -> Oracle:
    return Oracle(inst, mode, sigma, round_budget, measurement_budget, seed)


def write_transcripts(transcripts: list[RoundTranscript], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "rows", "measurements_cumulative", "information_after"])
        total = 0
        for t in transcripts:
            total += t.rows
            w.writerow([t.round, t.rows, total, repr(t.information_after)])
