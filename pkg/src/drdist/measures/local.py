"""Neighborhood-preservation measures.

Every function takes a :class:`MeasureContext` plus parameters and returns
``(globals, locals)``; ``locals`` is ``None`` for measures with no pointwise
decomposition.
"""
from __future__ import annotations

import numpy as np
from scipy import sparse

from ..errors import ParamError
from . import MeasureContext


def _check_tc_k(k: int, n: int):
    if 2 * k >= n:
        raise ParamError(f"k={k} must be below N/2 ({n}/2) for T&C normalization")


def _rank_penalties(ranks_ref: np.ndarray, knn_other: np.ndarray, k: int,
                    mask: np.ndarray | None = None) -> np.ndarray:
    """Per-point sum of (rank - k) over neighbors absent from the reference kNN."""
    r = np.take_along_axis(ranks_ref, knn_other, axis=1).astype(np.int64)
    pen = np.where(r > k, r - k, 0)
    if mask is not None:
        pen = np.where(mask, pen, 0)
    return pen.sum(axis=1)


def _tc_scores(pen_t: np.ndarray, pen_c: np.ndarray, n: int, k: int, names):
    scale = 2.0 / (k * (2 * n - 3 * k - 1))
    t_name, c_name = names
    globals_ = {
        t_name: 1.0 - scale * float(pen_t.sum()) / n,
        c_name: 1.0 - scale * float(pen_c.sum()) / n,
    }
    locals_ = {t_name: 1.0 - scale * pen_t, c_name: 1.0 - scale * pen_c}
    return globals_, locals_


def tnc(ctx: MeasureContext, k: int = 20):
    """Trustworthiness & Continuity."""
    n = ctx.n_points
    _check_tc_k(k, n)
    c = ctx.cache
    pen_t = _rank_penalties(c.ranks("high").ranks, c.knn("low", k), k)
    pen_c = _rank_penalties(c.ranks("low").ranks, c.knn("high", k), k)
    return _tc_scores(pen_t, pen_c, n, k, ("trustworthiness", "continuity"))


def ca_tnc(ctx: MeasureContext, k: int = 20):
    """Class-aware T&C: only inter-class violations are penalized."""
    n = ctx.n_points
    labels = ctx.require_labels()
    _check_tc_k(k, n)
    c = ctx.cache
    knn_low, knn_high = c.knn("low", k), c.knn("high", k)
    pen_t = _rank_penalties(c.ranks("high").ranks, knn_low, k,
                            labels[knn_low] != labels[:, None])
    pen_c = _rank_penalties(c.ranks("low").ranks, knn_high, k,
                            labels[knn_high] != labels[:, None])
    return _tc_scores(pen_t, pen_c, n, k, ("ca_trustworthiness", "ca_continuity"))


def mrre(ctx: MeasureContext, k: int = 20):
    """Mean relative rank errors, reported as 1 - error."""
    n = ctx.n_points
    c = ctx.cache
    r_high, r_low = c.ranks("high").ranks, c.ranks("low").ranks
    h_k = n * sum((n - 2 * l + 1) / l for l in range(1, k + 1))

    def per_point(knn, base, other):
        rb = np.take_along_axis(base, knn, axis=1).astype(np.float64)
        ro = np.take_along_axis(other, knn, axis=1).astype(np.float64)
        return (np.abs(ro - rb) / rb).sum(axis=1)

    err_false = per_point(c.knn("low", k), r_low, r_high)
    err_missing = per_point(c.knn("high", k), r_high, r_low)
    globals_ = {
        "mrre_false": 1.0 - float(err_false.sum()) / h_k,
        "mrre_missing": 1.0 - float(err_missing.sum()) / h_k,
    }
    locals_ = {
        "mrre_false": 1.0 - n * err_false / h_k,
        "mrre_missing": 1.0 - n * err_missing / h_k,
    }
    return globals_, locals_


def _overlap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # rows hold distinct ids, so duplicates after concatenation are the intersection
    both = np.sort(np.concatenate([a, b], axis=1), axis=1)
    return (both[:, 1:] == both[:, :-1]).sum(axis=1)


def lcmc(ctx: MeasureContext, k: int = 20):
    """Local continuity meta-criterion."""
    n = ctx.n_points
    c = ctx.cache
    overlap = _overlap(c.knn("high", k), c.knn("low", k))
    baseline = k / (n - 1)
    return (
        {"lcmc": float(overlap.sum()) / (n * k) - baseline},
        {"lcmc": overlap / k - baseline},
    )


def neighborhood_hit(ctx: MeasureContext, k: int = 20):
    labels = ctx.require_labels()
    knn = ctx.cache.knn("low", k)
    hits = (labels[knn] == labels[:, None]).sum(axis=1)
    return (
        {"neighborhood_hit": float(hits.sum()) / (ctx.n_points * k)},
        {"neighborhood_hit": hits / k},
    )


def snn_matrix(knn: np.ndarray) -> sparse.csr_matrix:
    """Shared-nearest-neighbor similarity with rank weights, zero diagonal.

    Entry (i, j) sums ``(k+1-rank_i(m)) * (k+1-rank_j(m))`` over the
    neighbors ``m`` the two points share. Values are integers stored as floats.
    """
    n, k = knn.shape
    weights = np.tile(np.arange(k, 0, -1, dtype=np.float64), n)
    rows = np.repeat(np.arange(n), k)
    w = sparse.csr_matrix((weights, (rows, knn.ravel())), shape=(n, n))
    s = (w @ w.T).tocsr()
    s.setdiag(0.0)
    s.eliminate_zeros()
    s.sort_indices()
    return s


def normalized_snn(s: sparse.csr_matrix) -> sparse.csr_matrix:
    peak = s.max() if s.nnz else 0.0
    return s / peak if peak > 0 else s.copy()


def neighbor_dissimilarity(ctx: MeasureContext, k: int = 20):
    """Mean absolute gap between the normalized SNN graphs (lower is better)."""
    n = ctx.n_points
    c = ctx.cache
    diff = normalized_snn(snn_matrix(c.knn("high", k))) - normalized_snn(
        snn_matrix(c.knn("low", k))
    )
    upper = sparse.triu(abs(diff), k=1)
    return {"neighbor_dissimilarity": float(upper.sum()) / (n * (n - 1) / 2)}, None


def _procrustes_residual(a: np.ndarray, b: np.ndarray) -> float:
    """Share of ``a``'s scatter left after the best similarity map of ``b`` onto it."""
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    sa = float((a * a).sum())
    if sa == 0.0:
        return 0.0
    sb = float((b * b).sum())
    if sb == 0.0:
        return 1.0
    nuclear = np.linalg.svd(b.T @ a, compute_uv=False).sum()
    return max(0.0, 1.0 - nuclear * nuclear / (sa * sb))


def procrustes(ctx: MeasureContext, k: int = 20):
    """Mean local Procrustes residual over high-space neighborhoods (lower is better)."""
    if k < 2:
        raise ParamError(f"procrustes needs k >= 2, got {k}")
    knn = ctx.cache.knn("high", k)
    residuals = [_procrustes_residual(ctx.x[nb], ctx.y[nb]) for nb in knn]
    return {"procrustes": float(np.mean(residuals))}, None
