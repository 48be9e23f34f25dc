"""Planted spiked-Gaussian instances and the derived block constructions.

An instance holds a Gaussian background ``G`` and plant factors ``U``, ``V``;
the hidden matrix is ``M = G + (alpha / sqrt(n)) U V^T``.  Every instance
exposes the same small surface used by the oracle:

    dim         side length of the (square) matrix
    plant       deterministic part measured in noisy mode
    background  Gaussian part added in exact mode
    observed    plant + background
    components  list of (left, right) vector pairs whose tensor products are
                tracked by the information functional

Sampling uses ``numpy.random.default_rng(seed)``; draws are reproducible for a
fixed numpy version, not across versions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

LRA_DIAG_FACTOR = 3.0
SINGULAR_INDEX_DIAG_FACTOR = 10.0


class InstanceError(ValueError):
    """Invalid instance parameters."""


class DimensionError(InstanceError):
    pass


class RankOutOfRange(InstanceError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    n: int
    r: int
    alpha: float
    seed: int
    G: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.n

    @property
    def scale(self) -> float:
        return self.alpha / np.sqrt(self.n)

    @property
    def plant(self) -> np.ndarray:
        return self.scale * (self.U @ self.V.T)

    @property
    def background(self) -> np.ndarray:
        return self.G

    @property
    def observed(self) -> np.ndarray:
        return self.G + self.plant

    @property
    def components(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.U[:, i], self.V[:, i]) for i in range(self.r)]


def gen_planted(n: int, r: int, alpha: float, seed: int) -> PlantedInstance:
    """Sample ``G`` (n x n), ``U`` and ``V`` (n x r) from one seeded normal stream."""
    if n < 2:
        raise DimensionError(f"n must be >= 2, got {n}")
    if r < 1 or 2 * r > n:
        raise RankOutOfRange(f"r must satisfy 1 <= r <= n/2, got r={r}, n={n}")
    if alpha < 0:
        raise InstanceError(f"alpha must be nonnegative, got {alpha}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    U = rng.standard_normal((n, r))
    V = rng.standard_normal((n, r))
    return PlantedInstance(int(n), int(r), float(alpha), int(seed), _frozen(G), _frozen(U), _frozen(V))


def observed(inst) -> np.ndarray:
    return inst.observed


def without_background(inst: PlantedInstance) -> PlantedInstance:
    """Same plant with ``G = 0``; used for noiseless sanity runs."""
    return replace(inst, G=_frozen(np.zeros_like(inst.G)))


def with_background(inst: PlantedInstance, seed: int) -> PlantedInstance:
    """Same plant with a fresh Gaussian background drawn from ``seed``."""
    G = np.random.default_rng(seed).standard_normal((inst.n, inst.n))
    return replace(inst, G=_frozen(G))


# -- derived constructions ----------------------------------------------------

def _pad(x: np.ndarray, size: int, offset: int = 0) -> np.ndarray:
    out = np.zeros(size)
    out[offset:offset + x.shape[0]] = x
    return out


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n + m, n + m))
    out[:n, :n] = a
    out[n:, n:] = b
    return out


@dataclass(frozen=True, eq=False)
class DerivedInstance:
    """A block construction around a planted instance.

    ``kind`` is one of ``symmetric``, ``diag-augmented`` or ``sparse-embedded``.
    """

    kind: str
    base: PlantedInstance
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        n = self.base.n
        if self.kind == "symmetric":
            return 2 * n
        if self.kind == "diag-augmented":
            return n + self.params["block"]
        return self.params["n_target"]

    def _lift(self, M: np.ndarray, extra: np.ndarray | None = None) -> np.ndarray:
        n = self.base.n
        if self.kind == "symmetric":
            out = np.zeros((2 * n, 2 * n))
            out[:n, n:] = M
            out[n:, :n] = M.T
            return out
        if self.kind == "diag-augmented":
            if extra is None:
                extra = np.zeros((self.params["block"],) * 2)
            return _block_diag(M, extra)
        out = np.zeros((self.dim, self.dim))
        out[:n, :n] = M
        return out

    @property
    def diagonal_block(self) -> np.ndarray:
        return self.params.get("diag_value", 0.0) * np.eye(self.params.get("block", 0))

    @property
    def plant(self) -> np.ndarray:
        if self.kind == "diag-augmented":
            return self._lift(self.base.plant, self.diagonal_block)
        return self._lift(self.base.plant)

    @property
    def background(self) -> np.ndarray:
        return self._lift(self.base.background)

    @property
    def observed(self) -> np.ndarray:
        if self.kind == "diag-augmented":
            return self._lift(self.base.observed, self.diagonal_block)
        return self._lift(self.base.observed)

    @property
    def components(self) -> list[tuple[np.ndarray, np.ndarray]]:
        n, d = self.base.n, self.dim
        right_offset = n if self.kind == "symmetric" else 0
        return [(_pad(u, d), _pad(v, d, right_offset)) for u, v in self.base.components]


def symmetrize(inst: PlantedInstance) -> DerivedInstance:
    """The 2n x 2n matrix [[0, M], [M^T, 0]]."""
    return DerivedInstance("symmetric", inst, {})


def translate_measurement(S: np.ndarray) -> np.ndarray:
    """Map a 2n x 2n query on the symmetrized matrix to an n x n query on M.

    <S, [[0, M], [M^T, 0]]> = <S12 + S21^T, M>.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
        raise DimensionError(f"expected a 2n x 2n query, got shape {S.shape}")
    n = S.shape[0] // 2
    return S[:n, n:] + S[n:, :n].T


def augment_diagonal(inst: PlantedInstance, variant: str, r_or_i: int,
                     diag_value: float | None = None) -> DerivedInstance:
    """Block-diagonal [[M, 0], [0, c I_{j-1}]].

    ``variant="lra-rank-r"`` uses c = 3 sqrt(n) alpha so that the top singular
    pair of M becomes the r-th pair; ``variant="singular-index-i"`` uses
    c = 10 sqrt(n) alpha so that it becomes the i-th pair.
    """
    n = inst.n
    if not 1 <= r_or_i <= n:
        raise InstanceError(f"index must lie in [1, {n}], got {r_or_i}")
    if variant == "lra-rank-r":
        factor = LRA_DIAG_FACTOR
    elif variant == "singular-index-i":
        factor = SINGULAR_INDEX_DIAG_FACTOR
    else:
        raise InstanceError(f"unknown variant {variant!r}")
    if diag_value is None:
        diag_value = factor * np.sqrt(n) * inst.alpha
    return DerivedInstance("diag-augmented", inst,
                           {"variant": variant, "index": int(r_or_i),
                            "block": int(r_or_i) - 1, "diag_value": float(diag_value)})


def sparse_embed(inst: PlantedInstance, n_target: int) -> DerivedInstance:
    """Place M in the top-left corner of an n_target x n_target zero matrix."""
    if n_target < inst.n:
        raise DimensionError(f"n_target={n_target} is smaller than n={inst.n}")
    return DerivedInstance("sparse-embedded", inst, {"n_target": int(n_target), "max_nonzeros": inst.n ** 2})


# -- dump / load ---------------------------------------------------------------

def dump(inst: PlantedInstance, path) -> None:
    """Write an ``.npz`` container: a JSON header plus row-major G, U, V."""
    header = {"n": inst.n, "r": inst.r, "alpha": inst.alpha, "seed": inst.seed,
              "format_version": FORMAT_VERSION}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), G=inst.G, U=inst.U, V=inst.V)


def load(path) -> PlantedInstance:
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != FORMAT_VERSION:
            raise InstanceError(f"unsupported format version {header.get('format_version')}")
        n, r = int(header["n"]), int(header["r"])
        G, U, V = data["G"], data["U"], data["V"]
        if G.shape != (n, n) or U.shape != (n, r) or V.shape != (n, r):
            raise InstanceError("matrix shapes do not match header")
        return PlantedInstance(n, r, float(header["alpha"]), int(header["seed"]),
                               _frozen(G), _frozen(U), _frozen(V))
