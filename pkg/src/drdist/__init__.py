"""Dimensionality-reduction distortion measures with shared preprocessing."""
from .core import (
    LabelVector,
    MeasureOutput,
    MeasureSpec,
    PointMatrix,
    load_labels,
    load_matrix,
    load_spec,
    save_labels,
    save_matrix,
)
from .registry import MEASURE_IDS, lookup
from .scheduler import Engine, derive_plan, run_standalone

__version__ = "0.1.0"

__all__ = [
    "Engine", "LabelVector", "MEASURE_IDS", "MeasureOutput", "MeasureSpec",
    "PointMatrix", "derive_plan", "load_labels", "load_matrix", "load_spec",
    "lookup", "run_standalone", "save_labels", "save_matrix",
]
