"""Domain types and file ingestion shared by every other module."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    FormatError,
    IoError,
    NonFiniteError,
    ParamError,
    ShapeError,
    TooSmallError,
)

FORMATS = ("csv", "raw-f64")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointMatrix:
    """N points in ``dim`` dimensions, stored row-major as float64."""

    data: np.ndarray

    def __post_init__(self):
        a = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if a.ndim != 2:
            raise ShapeError(f"expected a 2-D matrix, got {a.ndim}-D")
        if a.shape[0] < 2:
            raise TooSmallError(f"need at least 2 points, got {a.shape[0]}")
        if a.shape[1] < 1:
            raise ShapeError("points must have at least one coordinate")
        if not np.isfinite(a).all():
            raise NonFiniteError("matrix contains NaN or Inf")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_point_matrix(m) -> PointMatrix:
    return m if isinstance(m, PointMatrix) else PointMatrix(m)


@dataclass(frozen=True, eq=False)
class LabelVector:
    labels: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 1:
            raise ShapeError("labels must be a 1-D vector")
        if raw.dtype.kind == "f":
            if not np.isfinite(raw).all() or (raw != np.round(raw)).any():
                raise FormatError("labels must be integers")
        elif raw.dtype.kind not in "iub":
            raise FormatError("labels must be integers")
        a = raw.astype(np.int64)
        if (a < 0).any():
            raise FormatError("labels must be non-negative")
        object.__setattr__(self, "labels", _frozen(a))

    @property
    def n_classes(self) -> int:
        return int(np.unique(self.labels).size)

    def __len__(self):
        return self.labels.size


def as_label_vector(labels) -> LabelVector | None:
    if labels is None or isinstance(labels, LabelVector):
        return labels
    return LabelVector(labels)


def check_pair(x: PointMatrix, y: PointMatrix, labels: LabelVector | None = None):
    if x.n_points != y.n_points:
        raise ShapeError(
            f"high and low matrices disagree on N ({x.n_points} vs {y.n_points})"
        )
    if labels is not None and len(labels) != x.n_points:
        raise ShapeError(f"{len(labels)} labels for {x.n_points} points")


# ---------------------------------------------------------------- specs


@dataclass(frozen=True)
class SpecEntry:
    id: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"id": self.id, "params": dict(self.params)}


@dataclass(frozen=True)
class MeasureSpec:
    """Ordered list of measures with their parameters.

    Validated against the measure registry on construction, so unknown ids
    and undeclared parameters never reach the scheduler.
    """

    entries: tuple[SpecEntry, ...]

    def __post_init__(self):
        from .registry import lookup

        entries = tuple(
            e if isinstance(e, SpecEntry) else SpecEntry(**e) for e in self.entries
        )
        for i, e in enumerate(entries):
            desc = lookup(e.id)
            try:
                desc.resolve(e.params)
            except ParamError as err:
                raise err.tagged(i, e.id) from err
            except ConfigError as err:
                raise type(err)(f"spec[{i}] ({e.id}): {err}") from err
        object.__setattr__(self, "entries", entries)

    @classmethod
    def parse(cls, obj: Sequence[Mapping[str, Any]]) -> "MeasureSpec":
        if isinstance(obj, MeasureSpec):
            return obj
        if not isinstance(obj, (list, tuple)):
            raise ConfigError("a spec is a list of {id, params} objects")
        entries = []
        for i, item in enumerate(obj):
            if not isinstance(item, Mapping) or "id" not in item:
                raise ConfigError(f"spec[{i}] must be an object with an 'id' field")
            extra = set(item) - {"id", "params"}
            if extra:
                raise ConfigError(f"spec[{i}] has unexpected fields {sorted(extra)}")
            params = item.get("params") or {}
            if not isinstance(params, Mapping):
                raise ConfigError(f"spec[{i}].params must be an object")
            entries.append(SpecEntry(str(item["id"]), dict(params)))
        return cls(tuple(entries))

    @classmethod
    def loads(cls, text: str) -> "MeasureSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as err:
            raise FormatError(f"spec is not valid JSON: {err}") from err
        return cls.parse(obj)

    def to_json(self) -> list[dict]:
        return [e.to_json() for e in self.entries]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def load_spec(path) -> MeasureSpec:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise IoError(f"cannot read spec {path}: {err}") from err
    return MeasureSpec.loads(text)


def save_spec(spec: MeasureSpec, path) -> None:
    try:
        Path(path).write_text(spec.dumps() + "\n")
    except OSError as err:
        raise IoError(f"cannot write spec {path}: {err}") from err


# ---------------------------------------------------------------- outputs


@dataclass(frozen=True, eq=False)
class MeasureOutput:
    id: str
    globals: dict[str, float]
    locals: dict[str, np.ndarray] | None = None
    orientation: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"id": self.id, "globals": dict(self.globals)}
        if self.locals is not None:
            out["locals"] = {k: v.tolist() for k, v in self.locals.items()}
        out["orientation"] = dict(self.orientation)
        return out


# ---------------------------------------------------------------- matrices


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in FORMATS:
            raise ConfigError(f"unknown matrix format {fmt!r}; expected one of {FORMATS}")
        return fmt
    return "csv" if path.suffix.lower() in (".csv", ".txt") else "raw-f64"


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def _parse_csv(path: Path) -> np.ndarray:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise FormatError(
                    f"{path}:{lineno}: expected {width} values, found {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as err:
                raise FormatError(f"{path}:{lineno}: {err}") from err
    if not rows:
        raise TooSmallError(f"{path} contains no rows")
    return np.array(rows, dtype=np.float64)


def load_matrix(path, format: str | None = None) -> PointMatrix:
    """Read a matrix written as headerless CSV or raw little-endian float64.

    Raw files need a ``<path>.meta`` sidecar holding ``N dim``.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    try:
        if fmt == "csv":
            data = _parse_csv(path)
        else:
            meta = _meta_path(path).read_text().split()
            if len(meta) != 2:
                raise FormatError(f"{_meta_path(path)} must contain 'N dim'")
            n, dim = (int(v) for v in meta)
            data = np.fromfile(path, dtype="<f8")
            if data.size != n * dim:
                raise FormatError(
                    f"{path} holds {data.size} values, meta says {n}x{dim}"
                )
            data = data.reshape(n, dim)
    except OSError as err:
        raise IoError(f"cannot read {path}: {err}") from err
    return PointMatrix(data)


def save_matrix(m, path, format: str | None = None) -> None:
    m = as_point_matrix(m)
    path = Path(path)
    fmt = _infer_format(path, format)
    try:
        if fmt == "csv":
            with open(path, "w") as fh:
                for row in m.data:
                    fh.write(",".join(repr(float(v)) for v in row))
                    fh.write("\n")
        else:
            m.data.astype("<f8").tofile(path)
            _meta_path(path).write_text(f"{m.n_points} {m.dim}\n")
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err


def load_labels(path) -> LabelVector:
    path = Path(path)
    values = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                if "," in line:
                    raise FormatError(f"{path}:{lineno}: labels file has one column")
                try:
                    values.append(int(line))
                except ValueError as err:
                    raise FormatError(f"{path}:{lineno}: {err}") from err
    except OSError as err:
        raise IoError(f"cannot read {path}: {err}") from err
    return LabelVector(np.array(values, dtype=np.int64))


def save_labels(labels, path) -> None:
    labels = as_label_vector(labels)
    try:
        Path(path).write_text("".join(f"{int(v)}\n" for v in labels.labels))
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err


def worker_count() -> int:
    """Worker cap from ``DRDIST_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get("DRDIST_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"DRDIST_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1
