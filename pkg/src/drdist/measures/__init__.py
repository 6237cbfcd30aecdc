"""Distortion measures, grouped by the structural granularity they target."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import MissingLabelsError
from ..preprocess import PreprocessCache


@dataclass(frozen=True, eq=False)
class MeasureContext:
    """Everything a measure may read: raw coordinates, labels, shared blocks."""

    x: np.ndarray
    y: np.ndarray
    cache: PreprocessCache
    labels: np.ndarray | None = None

    @property
    def n_points(self) -> int:
        return self.x.shape[0]

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise MissingLabelsError("this measure needs class labels")
        return self.labels
