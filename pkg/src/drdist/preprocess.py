"""Shared preprocessing blocks: pairwise distances, rank matrices, kNN tables.

Ties in distance are broken by ascending point index everywhere, so a kNN
table sliced from a larger one is identical to one computed directly.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import as_point_matrix, check_pair, worker_count
from .errors import ConfigError, MissingBlockError, ParamError

METRICS = ("euclidean", "cosine")
SPACES = ("high", "low")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    metric: str = "euclidean"

    @property
    def n_points(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class RankMatrix:
    """``ranks[i, j]`` is the position of ``j`` around ``i`` (1..N-1); self is 0."""

    ranks: np.ndarray

    @property
    def n_points(self) -> int:
        return self.ranks.shape[0]

    @cached_property
    def order(self) -> np.ndarray:
        """Inverse permutation: ``order[i, r]`` is the point of rank ``r``."""
        n = self.n_points
        order = np.empty_like(self.ranks)
        cols = np.broadcast_to(np.arange(n, dtype=self.ranks.dtype), (n, n))
        np.put_along_axis(order, self.ranks.astype(np.intp), cols, axis=1)
        return _readonly(order)


@dataclass(frozen=True, eq=False)
class KnnTable:
    k: int
    indices: np.ndarray

    def sliced(self, k: int) -> "KnnTable":
        if not 1 <= k <= self.k:
            raise ParamError(f"cannot slice a {self.k}-NN table to k={k}")
        if k == self.k:
            return self
        return KnnTable(k, _readonly(self.indices[:, :k]))


def compute_distance_matrix(m, metric: str = "euclidean") -> DistanceMatrix:
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}; expected one of {METRICS}")
    m = as_point_matrix(m)
    if metric == "cosine":
        norms = np.linalg.norm(m.data, axis=1)
        if (norms == 0).any():
            raise ConfigError("cosine distance is undefined for zero vectors")
        flat = np.clip(pdist(m.data, "cosine"), 0.0, 2.0)
    else:
        flat = pdist(m.data, "euclidean")
    return DistanceMatrix(_readonly(squareform(flat)), metric)


def _row_chunks(n: int, workers: int):
    step = max(1, -(-n // (workers * 4)))
    return [(s, min(n, s + step)) for s in range(0, n, step)]


def _parallel_rows(fn, n: int):
    """Apply ``fn(start, stop)`` to row chunks; numpy releases the GIL in sorts."""
    workers = min(worker_count(), n)
    chunks = _row_chunks(n, workers)
    if workers == 1:
        for s, e in chunks:
            fn(s, e)
        return
    with ThreadPoolExecutor(workers) as pool:
        list(pool.map(lambda c: fn(*c), chunks))


def compute_rank_matrix(d: DistanceMatrix) -> RankMatrix:
    values = d.values
    n = values.shape[0]
    ranks = np.empty((n, n), dtype=np.int32)
    positions = np.arange(n, dtype=np.int32)

    def fill(start, stop):
        block = values[start:stop].copy()
        rows = np.arange(stop - start)
        block[rows, rows + start] = -1.0  # self always first
        order = np.argsort(block, axis=1, kind="stable")
        np.put_along_axis(
            ranks[start:stop], order, np.broadcast_to(positions, order.shape), axis=1
        )

    _parallel_rows(fill, n)
    return RankMatrix(_readonly(ranks))


def _check_k(k, n: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise ParamError(f"k must be an integer, got {k!r}")
    k = int(k)
    if k < 1:
        raise ParamError(f"k must be positive, got {k}")
    if k >= n:
        raise ParamError(f"k={k} is not smaller than the dataset size N={n}")
    return k


def compute_knn(r: RankMatrix, k: int) -> KnnTable:
    n = r.n_points
    k = _check_k(k, n)
    # exactly k entries per row carry ranks 1..k; argwhere keeps row-major order
    hits = np.argwhere((r.ranks >= 1) & (r.ranks <= k))
    cols = hits[:, 1].reshape(n, k)
    by_rank = np.argsort(np.take_along_axis(r.ranks, cols, axis=1), axis=1)
    return KnnTable(k, _readonly(np.take_along_axis(cols, by_rank, axis=1)))


def knn_from_distances(d: DistanceMatrix, k: int) -> KnnTable:
    """Exact kNN straight from distances, same tie-break as the rank path."""
    values = d.values
    n = values.shape[0]
    k = _check_k(k, n)
    out = np.empty((n, k), dtype=np.int64)

    def fill(start, stop):
        block = values[start:stop].copy()
        rows = np.arange(stop - start)
        block[rows, rows + start] = -1.0
        # k-th value (self sits at position 0) bounds the candidate set
        thresh = np.partition(block, k, axis=1)[:, k]
        for r in rows:
            cand = np.flatnonzero(block[r] <= thresh[r])
            cand = cand[np.lexsort((cand, block[r, cand]))]
            out[start + r] = cand[1 : k + 1]

    _parallel_rows(fill, n)
    return KnnTable(k, _readonly(out))


@dataclass(frozen=True)
class PreprocessPlan:
    """Which blocks to build. kNN sizes are the maximum requested per space."""

    need_dist_high: bool = False
    need_dist_low: bool = False
    need_rank_high: bool = False
    need_rank_low: bool = False
    knn_k_high: int | None = None
    knn_k_low: int | None = None
    metric: str = "euclidean"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        for space in SPACES:
            if (self.rank(space) or self.knn_k(space)) and not self.dist(space):
                raise ConfigError(
                    f"{space}-space ranks/kNN need the {space}-space distance matrix"
                )

    def dist(self, space: str) -> bool:
        return getattr(self, f"need_dist_{space}")

    def rank(self, space: str) -> bool:
        return getattr(self, f"need_rank_{space}")

    def knn_k(self, space: str) -> int | None:
        return getattr(self, f"knn_k_{space}")

    def blocks(self) -> frozenset[str]:
        out = set()
        for space in SPACES:
            if self.dist(space):
                out.add(f"dist_{space}")
            if self.rank(space):
                out.add(f"rank_{space}")
            if self.knn_k(space):
                out.add(f"knn_{space}")
        return frozenset(out)

    def without(self, block: str) -> "PreprocessPlan":
        """Copy with one block dropped (no dependency closure enforced)."""
        kind, space = block.split("_")
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        key = {"dist": "need_dist_", "rank": "need_rank_", "knn": "knn_k_"}[kind] + space
        fields[key] = None if kind == "knn" else False
        obj = object.__new__(PreprocessPlan)
        for f, v in fields.items():
            object.__setattr__(obj, f, v)
        return obj


@dataclass(frozen=True, eq=False)
class SpaceBlocks:
    dist: DistanceMatrix | None = None
    rank: RankMatrix | None = None
    knn: KnnTable | None = None
    computed: tuple[str, ...] = ()


def build_space(m, space: str, *, dist: bool, rank: bool, knn_k: int | None,
                metric: str = "euclidean") -> SpaceBlocks:
    m = as_point_matrix(m)
    if knn_k is not None:
        knn_k = _check_k(knn_k, m.n_points)
    computed = []
    dmat = rmat = table = None
    if dist or rank or knn_k:
        dmat = compute_distance_matrix(m, metric)
        computed.append(f"dist_{space}")
    if rank:
        rmat = compute_rank_matrix(dmat)
        computed.append(f"rank_{space}")
    if knn_k:
        table = compute_knn(rmat, knn_k) if rmat is not None else knn_from_distances(dmat, knn_k)
        computed.append(f"knn_{space}")
    return SpaceBlocks(dmat, rmat, table, tuple(computed))


@dataclass(frozen=True, eq=False)
class PreprocessCache:
    """Read-only bundle of blocks for both spaces, injected into measures."""

    high: SpaceBlocks = field(default_factory=SpaceBlocks)
    low: SpaceBlocks = field(default_factory=SpaceBlocks)

    def _space(self, space: str) -> SpaceBlocks:
        if space not in SPACES:
            raise ValueError(f"space must be 'high' or 'low', got {space!r}")
        return getattr(self, space)

    def distances(self, space: str) -> np.ndarray:
        block = self._space(space).dist
        if block is None:
            raise MissingBlockError(f"dist_{space} was not computed")
        return block.values

    def ranks(self, space: str) -> RankMatrix:
        block = self._space(space).rank
        if block is None:
            raise MissingBlockError(f"rank_{space} was not computed")
        return block

    def knn(self, space: str, k: int) -> np.ndarray:
        block = self._space(space).knn
        if block is None:
            raise MissingBlockError(f"knn_{space} was not computed")
        if k > block.k:
            raise MissingBlockError(f"knn_{space} holds k={block.k}, measure needs {k}")
        return block.sliced(k).indices

    @property
    def computed(self) -> tuple[str, ...]:
        return self.high.computed + self.low.computed

    # flat accessors mirroring the cache fields
    dist_high = property(lambda self: self.high.dist)
    dist_low = property(lambda self: self.low.dist)
    rank_high = property(lambda self: self.high.rank)
    rank_low = property(lambda self: self.low.rank)
    knn_high = property(lambda self: self.high.knn)
    knn_low = property(lambda self: self.low.knn)


def build_cache(x, y, plan: PreprocessPlan, metric: str | None = None) -> PreprocessCache:
    x, y = as_point_matrix(x), as_point_matrix(y)
    check_pair(x, y)
    metric = metric or plan.metric
    sides = {
        space: build_space(
            m, space, dist=plan.dist(space), rank=plan.rank(space),
            knn_k=plan.knn_k(space), metric=metric,
        )
        for space, m in (("high", x), ("low", y))
    }
    return PreprocessCache(**sides)
