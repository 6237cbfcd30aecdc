"""Turns a measure spec into one preprocessing pass plus per-measure calls.

All blocks are built first, then measures run in spec order against the
shared cache. High-space blocks are built once per :class:`Engine` and
reused for every embedding measured against it.
"""
from __future__ import annotations

import threading
from typing import Any, Mapping

import numpy as np

from .core import (
    LabelVector,
    MeasureOutput,
    MeasureSpec,
    PointMatrix,
    SpecEntry,
    as_label_vector,
    as_point_matrix,
    check_pair,
)
from .errors import MissingLabelsError, ParamError
from .measures import MeasureContext
from .preprocess import SPACES, PreprocessCache, PreprocessPlan, build_space
from .registry import lookup


def derive_plan(spec, metric: str = "euclidean", labels_available: bool = True) -> PreprocessPlan:
    spec = MeasureSpec.parse(spec)
    blocks: set[str] = set()
    knn_k = {"high": None, "low": None}
    for i, entry in enumerate(spec):
        desc = lookup(entry.id)
        if desc.needs_labels and not labels_available:
            raise MissingLabelsError(f"spec[{i}] ({entry.id}) needs class labels")
        blocks |= desc.requires
        params = desc.resolve(entry.params)
        for space in SPACES:
            if f"knn_{space}" in desc.requires:
                k = params["k"]
                knn_k[space] = k if knn_k[space] is None else max(knn_k[space], k)
    return PreprocessPlan(
        need_dist_high="dist_high" in blocks,
        need_dist_low="dist_low" in blocks,
        need_rank_high="rank_high" in blocks,
        need_rank_low="rank_low" in blocks,
        knn_k_high=knn_k["high"],
        knn_k_low=knn_k["low"],
        metric=metric,
    )


def _check_sizes(spec: MeasureSpec, n: int):
    for i, entry in enumerate(spec):
        desc = lookup(entry.id)
        if desc.uses_knn:
            k = desc.resolve(entry.params)["k"]
            if k >= n:
                raise ParamError(f"k={k} is not smaller than N={n}", i, entry.id)


def _execute(index: int, entry: SpecEntry, ctx: MeasureContext, return_local: bool) -> MeasureOutput:
    desc = lookup(entry.id)
    params = desc.resolve(entry.params)
    if desc.needs_labels:
        ctx.require_labels()
    try:
        globals_, locals_ = desc.func(ctx, **params)
    except ParamError as err:
        raise err.tagged(index, entry.id) from err
    keep = return_local and desc.supports_local
    return MeasureOutput(
        id=entry.id,
        globals=globals_,
        locals={k: np.asarray(v, dtype=np.float64) for k, v in locals_.items()} if keep else None,
        orientation=dict(desc.orientation),
    )


class Engine:
    """A spec bound to a registered high-dimensional dataset.

    >>> engine = Engine([{"id": "tnc", "params": {"k": 5}}], hd)   # doctest: +SKIP
    >>> engine.measure(ld)                                          # doctest: +SKIP
    [{'trustworthiness': ..., 'continuity': ...}]
    """

    def __init__(self, spec, high, labels=None, *, return_local: bool = False,
                 metric: str = "euclidean"):
        self.spec = MeasureSpec.parse(spec)
        self.high = as_point_matrix(high)
        self.labels = as_label_vector(labels)
        if self.labels is not None:
            check_pair(self.high, self.high, self.labels)
        self.return_local = return_local
        self.metric = metric
        self.plan = derive_plan(self.spec, metric, labels_available=self.labels is not None)
        _check_sizes(self.spec, self.high.n_points)
        self._high_blocks = None
        self._lock = threading.Lock()

    def _high(self):
        with self._lock:
            if self._high_blocks is None:
                p = self.plan
                self._high_blocks = build_space(
                    self.high, "high", dist=p.need_dist_high, rank=p.need_rank_high,
                    knn_k=p.knn_k_high, metric=self.metric,
                )
            return self._high_blocks

    def build_cache(self, low) -> PreprocessCache:
        low = as_point_matrix(low)
        check_pair(self.high, low)
        p = self.plan
        low_blocks = build_space(low, "low", dist=p.need_dist_low, rank=p.need_rank_low,
                                 knn_k=p.knn_k_low, metric=self.metric)
        return PreprocessCache(high=self._high(), low=low_blocks)

    def run(self, low, labels=None) -> list[MeasureOutput]:
        low = as_point_matrix(low)
        labels = as_label_vector(labels) if labels is not None else self.labels
        check_pair(self.high, low, labels)
        cache = self.build_cache(low)
        ctx = MeasureContext(self.high.data, low.data, cache,
                             None if labels is None else labels.labels)
        return [_execute(i, e, ctx, self.return_local) for i, e in enumerate(self.spec)]

    def measure(self, low, labels=None):
        """Scores per spec entry; with ``return_local`` also the pointwise vectors.

        Locals are ``None`` for measures without a pointwise decomposition.
        """
        outputs = self.run(low, labels)
        scores = [dict(o.globals) for o in outputs]
        if not self.return_local:
            return scores
        return scores, [o.locals for o in outputs]


def run(engine: Engine, y, labels=None) -> list[MeasureOutput]:
    return engine.run(y, labels)


def run_standalone(measure_id: str, x, y, params: Mapping[str, Any] | None = None,
                   labels=None, *, metric: str = "euclidean",
                   return_local: bool = False) -> MeasureOutput:
    """Evaluate one measure with freshly computed blocks and no reuse."""
    spec = MeasureSpec((SpecEntry(measure_id, dict(params or {})),))
    x, y = as_point_matrix(x), as_point_matrix(y)
    labels = as_label_vector(labels)
    check_pair(x, y, labels)
    plan = derive_plan(spec, metric, labels_available=labels is not None)
    _check_sizes(spec, x.n_points)
    cache = PreprocessCache(
        high=build_space(x, "high", dist=plan.need_dist_high, rank=plan.need_rank_high,
                         knn_k=plan.knn_k_high, metric=metric),
        low=build_space(y, "low", dist=plan.need_dist_low, rank=plan.need_rank_low,
                        knn_k=plan.knn_k_low, metric=metric),
    )
    ctx = MeasureContext(x.data, y.data, cache, None if labels is None else labels.labels)
    return _execute(0, spec.entries[0], ctx, return_local)


__all__ = [
    "Engine", "PreprocessPlan", "derive_plan", "run", "run_standalone",
    "LabelVector", "PointMatrix",
]
