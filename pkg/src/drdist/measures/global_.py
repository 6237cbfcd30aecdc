"""Measures of pairwise-distance consistency across the whole dataset."""
from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..errors import DegenerateInputError, ParamError
from . import MeasureContext


def _upper(d: np.ndarray) -> np.ndarray:
    return d[np.triu_indices(d.shape[0], k=1)]


def stress(ctx: MeasureContext):
    dh = _upper(ctx.cache.distances("high"))
    dl = _upper(ctx.cache.distances("low"))
    denom = float(np.dot(dh, dh))
    if denom == 0.0:
        raise DegenerateInputError("all high-dimensional points coincide")
    diff = dh - dl
    return {"stress": float(np.sqrt(np.dot(diff, diff) / denom))}, None


def density_profile(d: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian-kernel density per point on max-normalized distances, summing to 1."""
    peak = d.max()
    if peak == 0.0:
        raise DegenerateInputError("all points coincide; densities undefined")
    kernel = np.exp(-((d / peak) ** 2) / sigma**2)
    np.fill_diagonal(kernel, 0.0)
    dens = kernel.sum(axis=1)
    return dens / dens.sum()


def _profiles(ctx: MeasureContext, sigma: float):
    if not sigma > 0:
        raise ParamError(f"sigma must be positive, got {sigma}")
    return (density_profile(ctx.cache.distances("high"), sigma),
            density_profile(ctx.cache.distances("low"), sigma))


def kl_div(ctx: MeasureContext, sigma: float = 0.1):
    p, q = _profiles(ctx, sigma)
    mask = p > 0
    with np.errstate(divide="ignore"):
        value = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    return {"kl_divergence": value}, None


def dtm(ctx: MeasureContext, sigma: float = 0.1):
    p, q = _profiles(ctx, sigma)
    return {"dtm": float(np.sqrt(np.sum((p - q) ** 2)))}, None


def topographic_product(ctx: MeasureContext, max_k: int | None = None):
    c = ctx.cache
    n = ctx.n_points
    kmax = n - 1 if max_k is None else max_k
    if not 1 <= kmax <= n - 1:
        raise ParamError(f"max_k must lie in [1, {n - 1}], got {max_k}")
    dh, dl = c.distances("high"), c.distances("low")
    nh = c.ranks("high").order[:, 1 : kmax + 1]
    nl = c.ranks("low").order[:, 1 : kmax + 1]
    num_h = np.take_along_axis(dh, nl, axis=1)
    den_h = np.take_along_axis(dh, nh, axis=1)
    num_l = np.take_along_axis(dl, nl, axis=1)
    den_l = np.take_along_axis(dl, nh, axis=1)
    for arr, nb in ((num_h, nl), (den_h, nh), (num_l, nl), (den_l, nh)):
        zero = np.argwhere(arr == 0.0)
        if zero.size:
            i, col = zero[0]
            raise DegenerateInputError(
                f"points {i} and {nb[i, col]} coincide; topographic ratios undefined",
                indices=(int(i), int(nb[i, col])),
            )
    logs = np.log(num_h / den_h) + np.log(num_l / den_l)
    log_p3 = np.cumsum(logs, axis=1) / (2.0 * np.arange(1, kmax + 1))
    return {"topographic_product": float(log_p3.sum()) / (n * kmax)}, None


def _correlation(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    va, vb = float(np.dot(a, a)), float(np.dot(b, b))
    if va == 0.0 or vb == 0.0:
        raise DegenerateInputError("pairwise distances have zero variance")
    return float(np.clip(np.dot(a, b) / np.sqrt(va * vb), -1.0, 1.0))


def pearson_r(ctx: MeasureContext):
    c = ctx.cache
    r = _correlation(_upper(c.distances("high")), _upper(c.distances("low")))
    return {"pearson_r": r}, None


def spearman_rho(ctx: MeasureContext):
    c = ctx.cache
    rho = _correlation(rankdata(_upper(c.distances("high"))),
                       rankdata(_upper(c.distances("low"))))
    return {"spearman_rho": rho}, None
