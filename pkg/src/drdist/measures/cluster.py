"""Cluster-level measures: Steadiness & Cohesiveness and label-driven checks."""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.cluster import HDBSCAN, KMeans
from sklearn.metrics import (
    adjusted_rand_score,
    calinski_harabasz_score,
    davies_bouldin_score,
    normalized_mutual_info_score,
    silhouette_score,
)

from ..errors import ParamError
from . import MeasureContext
from .local import normalized_snn, snn_matrix

CLUSTERINGS = ("hdbscan", "kmeans")
IVM_VARIANTS = ("silhouette", "calinski_harabasz", "davies_bouldin")
EXTERNAL_VALIDATIONS = ("ari", "nmi")


def partition_subset(members: np.ndarray, dist: np.ndarray, coords: np.ndarray, *,
                     clustering: str, min_cluster_size: int, n_clusters: int,
                     seed: int) -> np.ndarray:
    """Split an extracted point set into groups; returns one label per member."""
    m = members.size
    if clustering == "hdbscan":
        if m < 2 * min_cluster_size:
            return np.zeros(m, dtype=np.int64)
        sub = dist[np.ix_(members, members)]
        labels = HDBSCAN(min_cluster_size=min_cluster_size,
                         metric="precomputed").fit_predict(sub)
        noise = labels < 0
        if noise.all():
            return np.zeros(m, dtype=np.int64)
        if noise.any():
            # attach noise to the group of its nearest clustered member
            kept = np.flatnonzero(~noise)
            nearest = kept[np.argmin(sub[np.ix_(noise, kept)], axis=1)]
            labels[noise] = labels[nearest]
        return labels.astype(np.int64)
    if m <= n_clusters:
        return np.zeros(m, dtype=np.int64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # duplicate points trigger ConvergenceWarning
        km = KMeans(n_clusters=n_clusters, n_init=1, max_iter=300, tol=1e-6,
                    random_state=seed)
        return km.fit_predict(coords[members]).astype(np.int64)


def random_walk(snn, start: int, steps: int, rng: np.random.Generator) -> np.ndarray:
    """Visit nodes of a weighted graph; each hop is picked proportionally to weight."""
    visited = {start}
    current = start
    for _ in range(steps):
        lo, hi = snn.indptr[current], snn.indptr[current + 1]
        if lo == hi:
            break
        cum = np.cumsum(snn.data[lo:hi])
        target = rng.random() * cum[-1]
        pick = min(int(np.searchsorted(cum, target, side="right")), hi - lo - 1)
        current = int(snn.indices[lo + pick])
        visited.add(current)
    return np.array(sorted(visited), dtype=np.int64)


def _snc_direction(walk_snn, walk_norm, check_norm, check_dist, check_coords, *,
                   iterations, walk_length, rng, partition_kw):
    n = walk_snn.shape[0]
    distortion = np.zeros(n)
    weight = np.zeros(n)
    for _ in range(iterations):
        seed_point = int(rng.integers(n))
        members = random_walk(walk_snn, seed_point, walk_length, rng)
        if members.size < 2:
            continue
        groups = partition_subset(members, check_dist, check_coords, **partition_kw)
        ids = np.unique(groups)
        if ids.size < 2:
            continue
        sim_check = check_norm[members][:, members].toarray()
        sim_walk = walk_norm[members][:, members].toarray()
        parts = [np.flatnonzero(groups == g) for g in ids]
        for a in range(len(parts)):
            for b in range(a + 1, len(parts)):
                pa, pb = parts[a], parts[b]
                dis_check = 1.0 - sim_check[np.ix_(pa, pb)].mean()
                dis_walk = 1.0 - sim_walk[np.ix_(pa, pb)].mean()
                d = max(0.0, dis_check - dis_walk)
                ia, ib = members[pa], members[pb]
                distortion[ia] += pb.size * d
                weight[ia] += pb.size
                distortion[ib] += pa.size * d
                weight[ib] += pa.size
    local = np.ones(n)
    seen = weight > 0
    local[seen] = 1.0 - distortion[seen] / weight[seen]
    return local


def snc(ctx: MeasureContext, k: int = 20, iterations: int = 200,
        clustering: str = "hdbscan", seed: int = 42, min_cluster_size: int = 5,
        walk_length: int = 30, n_clusters: int = 3):
    """Steadiness & Cohesiveness.

    Clusters are grown by weighted random walks on one space's SNN graph and
    re-partitioned with the distances of the other space. A pair of groups
    that the checking space pulls further apart (in normalized SNN
    dissimilarity) than the walking space counts as distortion, weighted by
    group sizes. Steadiness walks the embedding and checks the original data
    (false clusters); cohesiveness does the reverse (missing clusters). Each
    point scores ``1 - distortion/weight`` over the pairs it joined; points
    never involved in a split score 1. Global scores are the mean of locals.
    """
    if iterations < 1:
        raise ParamError(f"iterations must be >= 1, got {iterations}")
    if clustering not in CLUSTERINGS:
        raise ParamError(f"unknown clustering {clustering!r}; expected {CLUSTERINGS}")
    if min_cluster_size < 2:
        raise ParamError("min_cluster_size must be >= 2")
    if n_clusters < 2:
        raise ParamError("n_clusters must be >= 2")
    if walk_length < 1:
        raise ParamError("walk_length must be >= 1")
    c = ctx.cache
    snn = {s: snn_matrix(c.knn(s, k)) for s in ("high", "low")}
    norm = {s: normalized_snn(m) for s, m in snn.items()}
    coords = {"high": ctx.x, "low": ctx.y}
    partition_kw = dict(clustering=clustering, min_cluster_size=min_cluster_size,
                        n_clusters=n_clusters, seed=seed)
    local = {}
    for name, walk, check, stream in (("steadiness", "low", "high", 0),
                                      ("cohesiveness", "high", "low", 1)):
        local[name] = _snc_direction(
            snn[walk], norm[walk], norm[check], c.distances(check), coords[check],
            iterations=iterations, walk_length=walk_length,
            rng=np.random.default_rng([seed, stream]), partition_kw=partition_kw,
        )
    return {name: float(v.mean()) for name, v in local.items()}, local


def _classes(labels: np.ndarray, minimum: int = 2) -> np.ndarray:
    classes = np.unique(labels)
    if classes.size < minimum:
        raise ParamError(f"need at least {minimum} classes, got {classes.size}")
    return classes


def dsc(ctx: MeasureContext):
    """Distance consistency: share of points closest to their own class centroid."""
    labels = ctx.require_labels()
    y = ctx.y
    classes = np.unique(labels)
    centroids = np.stack([y[labels == c].mean(axis=0) for c in classes])
    d = np.linalg.norm(y[:, None, :] - centroids[None, :, :], axis=2)
    nearest = classes[np.argmin(d, axis=1)]  # ties go to the lower class id
    return {"distance_consistency": float(np.mean(nearest == labels))}, None


def ivm(ctx: MeasureContext, variant: str = "silhouette"):
    """Internal validation index of the label partition on the embedding."""
    labels = ctx.require_labels()
    if variant not in IVM_VARIANTS:
        raise ParamError(f"unknown ivm variant {variant!r}; expected {IVM_VARIANTS}")
    classes = _classes(labels)
    n = labels.size
    if classes.size >= n:
        if variant == "silhouette":
            return {"ivm": 0.0}, None  # every point is a singleton
        raise ParamError(f"{variant} needs fewer classes than points")
    fn = {
        "silhouette": silhouette_score,
        "calinski_harabasz": calinski_harabasz_score,
        "davies_bouldin": davies_bouldin_score,
    }[variant]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return {"ivm": float(fn(ctx.y, labels))}, None


def cvm(ctx: MeasureContext, external: str = "ari", n_clusters: int | None = None,
        seed: int = 42):
    """K-means on the embedding scored against labels with ARI or NMI."""
    labels = ctx.require_labels()
    if external not in EXTERNAL_VALIDATIONS:
        raise ParamError(f"unknown external measure {external!r}")
    if n_clusters is None:
        n_clusters = np.unique(labels).size
    if n_clusters < 2:
        raise ParamError(f"n_clusters must be >= 2, got {n_clusters}")
    if n_clusters > labels.size:
        raise ParamError(f"n_clusters={n_clusters} exceeds N={labels.size}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pred = KMeans(n_clusters=n_clusters, init="k-means++", n_init=1,
                      max_iter=300, tol=1e-6, random_state=seed).fit_predict(ctx.y)
    score = (adjusted_rand_score if external == "ari" else normalized_mutual_info_score)(
        labels, pred
    )
    return {"cvm": float(score)}, None
