"""Wall-clock comparison of scheduled (shared preprocessing) vs per-measure runs."""
from __future__ import annotations

import time

import numpy as np

from .core import MeasureSpec, as_label_vector, as_point_matrix
from .errors import ParamError
from .scheduler import Engine, run_standalone

FIVE_MEASURES = [
    {"id": "tnc", "params": {"k": 20}},
    {"id": "mrre", "params": {"k": 20}},
    {"id": "snc", "params": {"k": 20}},
    {"id": "dtm", "params": {}},
    {"id": "kl_div", "params": {}},
]


def synthetic_dataset(n: int, dim: int = 50, n_clusters: int = 10, seed: int = 0) -> np.ndarray:
    """Gaussian blobs with unit spread around centers drawn at scale 4."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=4.0, size=(n_clusters, dim))
    assign = rng.integers(n_clusters, size=n)
    return centers[assign] + rng.normal(size=(n, dim))


def perturbed_embedding(x: np.ndarray, rng: np.random.Generator, jitter: float = 0.05) -> np.ndarray:
    """Random linear projection to 2-D plus Gaussian jitter."""
    proj = rng.normal(size=(x.shape[1], 2)) / np.sqrt(x.shape[1])
    y = x @ proj
    return y + rng.normal(scale=jitter * y.std(), size=y.shape)


def run_benchmark(x, spec, repetitions: int = 5, seed: int = 0, labels=None,
                  metric: str = "euclidean") -> dict:
    """Time both execution modes on the same embeddings.

    Each repetition registers a fresh :class:`Engine`, so the optimized mode
    only gains from blocks shared between measures within one evaluation,
    never from high-space blocks kept across repetitions.
    """
    if repetitions < 1:
        raise ParamError(f"repetitions must be >= 1, got {repetitions}")
    x = as_point_matrix(x)
    spec = MeasureSpec.parse(spec)
    labels = as_label_vector(labels)
    rng = np.random.default_rng(seed)
    optimized, naive = [], []
    max_gap = 0.0
    for _ in range(repetitions):
        y = perturbed_embedding(x.data, rng)
        t0 = time.perf_counter()
        fast = Engine(spec, x, labels, metric=metric).run(y)
        optimized.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        slow = [run_standalone(e.id, x, y, e.params, labels, metric=metric) for e in spec]
        naive.append(time.perf_counter() - t0)
        for a, b in zip(fast, slow):
            for name, v in a.globals.items():
                max_gap = max(max_gap, abs(v - b.globals[name]))
    mean_opt, mean_naive = float(np.mean(optimized)), float(np.mean(naive))
    return {
        "n_points": x.n_points,
        "dim": x.dim,
        "measures": [e.id for e in spec],
        "repetitions": repetitions,
        "seed": seed,
        "optimized_seconds": optimized,
        "naive_seconds": naive,
        "optimized_mean": mean_opt,
        "naive_mean": mean_naive,
        "speedup": mean_naive / mean_opt,
        "max_score_gap": max_gap,
    }
