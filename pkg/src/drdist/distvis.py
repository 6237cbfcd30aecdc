"""SVG renderings of pointwise distortions: CheckViz and the Reliability Map.

Both views color a point by its (false, missing) distortion pair on a
bilinear 2-D colormap: no distortion is white, pure false-neighbor
distortion purple, pure missing-neighbor distortion green, both black.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_point_matrix
from .errors import DegenerateGeometryError, DimensionError, ParamError, ShapeError, TooSmallError
from .preprocess import PreprocessCache, compute_distance_matrix, knn_from_distances

WHITE = "#ffffff"
PURPLE = "#b05cc6"
GREEN = "#63b663"
BLACK = "#000000"


def _rgb(hex_color: str) -> np.ndarray:
    h = hex_color.lstrip("#")
    return np.array([int(h[i : i + 2], 16) for i in (0, 2, 4)], dtype=np.float64)


@dataclass(frozen=True)
class VizConfig:
    width: int = 800
    height: int = 800
    margin: float = 0.05
    k: int = 5
    point_radius: float = 1.5
    color_none: str = WHITE
    color_false: str = PURPLE
    color_missing: str = GREEN
    color_both: str = BLACK

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ParamError("width and height must be positive")
        if self.k < 1:
            raise ParamError("k must be >= 1")
        if not 0 <= self.margin < 0.5:
            raise ParamError("margin must lie in [0, 0.5)")


@dataclass(frozen=True, eq=False)
class DistortionField:
    embedding: np.ndarray
    false_values: np.ndarray
    missing_values: np.ndarray

    def __post_init__(self):
        emb = as_point_matrix(self.embedding).data
        if emb.shape[1] != 2:
            raise DimensionError(f"embedding must be 2-D, got {emb.shape[1]} columns")
        vals = []
        for name in ("false_values", "missing_values"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (emb.shape[0],):
                raise ShapeError(f"{name} must have length {emb.shape[0]}")
            vals.append(np.clip(v, 0.0, 1.0))
        object.__setattr__(self, "embedding", emb)
        object.__setattr__(self, "false_values", vals[0])
        object.__setattr__(self, "missing_values", vals[1])

    @classmethod
    def from_scores(cls, embedding, local_false, local_missing) -> "DistortionField":
        """Build from higher-is-better local scores (e.g. local steadiness)."""
        return cls(embedding, 1.0 - np.asarray(local_false), 1.0 - np.asarray(local_missing))

    @property
    def n_points(self) -> int:
        return self.embedding.shape[0]


def colormap(false_value, missing_value, cfg: VizConfig = VizConfig()) -> np.ndarray:
    """Bilinear blend of the four corner colors; returns float RGB in [0, 255]."""
    f = np.clip(np.asarray(false_value, dtype=np.float64), 0, 1)[..., None]
    m = np.clip(np.asarray(missing_value, dtype=np.float64), 0, 1)[..., None]
    return ((1 - f) * (1 - m) * _rgb(cfg.color_none) + f * (1 - m) * _rgb(cfg.color_false)
            + (1 - f) * m * _rgb(cfg.color_missing) + f * m * _rgb(cfg.color_both))


def to_hex(rgb) -> str:
    r, g, b = (int(round(float(c))) for c in rgb)
    return f"#{r:02x}{g:02x}{b:02x}"


def _viewport(points: np.ndarray, cfg: VizConfig) -> np.ndarray:
    """Fit points into the padded viewport, keeping aspect ratio; y points up."""
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    inner_w = cfg.width * (1 - 2 * cfg.margin)
    inner_h = cfg.height * (1 - 2 * cfg.margin)
    scale = min(inner_w / span[0], inner_h / span[1])
    center = (lo + hi) / 2
    px = cfg.width / 2 + (points[:, 0] - center[0]) * scale
    py = cfg.height / 2 - (points[:, 1] - center[1]) * scale
    return np.column_stack([px, py])


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _clip(poly: list, origin: np.ndarray, normal: np.ndarray, offset: float) -> list:
    """Keep the part of ``poly`` where ``(p - origin) . normal <= offset``."""
    out = []
    n = len(poly)
    for idx in range(n):
        a, b = poly[idx], poly[(idx + 1) % n]
        sa = float(np.dot(a - origin, normal)) - offset
        sb = float(np.dot(b - origin, normal)) - offset
        if sa <= 0:
            out.append(a)
        if (sa < 0 < sb) or (sb < 0 < sa):
            out.append(a + (b - a) * (sa / (sa - sb)))
    return out


def voronoi_cells(points: np.ndarray, box: tuple[float, float, float, float]) -> list[np.ndarray]:
    """Voronoi cell of every point by half-plane clipping against a box."""
    x0, y0, x1, y1 = box
    n = points.shape[0]
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    order = np.argsort(dist, axis=1, kind="stable")
    cells = []
    for i in range(n):
        p = points[i]
        poly = [np.array(v, dtype=np.float64) for v in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
        reach = max(float(np.linalg.norm(v - p)) for v in poly)
        for j in order[i]:
            if j == i or dist[i, j] == 0.0:
                continue
            if dist[i, j] / 2 > reach:
                break  # no farther bisector can reach the cell
            normal = points[j] - p
            poly = _clip(poly, p, normal, float(np.dot(normal, normal)) / 2)
            if not poly:
                break
            reach = max(float(np.linalg.norm(v - p)) for v in poly)
        cells.append(np.array(poly))
    return cells


def _check_geometry(points: np.ndarray):
    if points.shape[0] < 3:
        raise TooSmallError("CheckViz needs at least 3 points")
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= 1e-12 * sv[0]:
        raise DegenerateGeometryError("all points are collinear; Voronoi cells are undefined")


def _header(cfg: VizConfig, kind: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" class="{kind}" '
        f'width="{cfg.width}" height="{cfg.height}" viewBox="0 0 {cfg.width} {cfg.height}">',
    ]


def _glyphs(px: np.ndarray, cfg: VizConfig) -> list[str]:
    lines = ['<g class="points" fill="#333333">']
    lines += [f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(cfg.point_radius)}"/>' for x, y in px]
    lines.append("</g>")
    return lines


def checkviz(field: DistortionField, cfg: VizConfig = VizConfig()) -> str:
    points = field.embedding
    _check_geometry(points)
    px = _viewport(points, cfg)
    cells = voronoi_cells(px, (0.0, 0.0, float(cfg.width), float(cfg.height)))
    colors = colormap(field.false_values, field.missing_values, cfg)
    lines = _header(cfg, "checkviz")
    lines.append('<g class="cells" stroke="none">')
    for i, (cell, rgb) in enumerate(zip(cells, colors)):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in cell)
        lines.append(f'<polygon data-index="{i}" points="{pts}" fill="{to_hex(rgb)}"/>')
    lines.append("</g>")
    lines += _glyphs(px, cfg)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _embedding_knn(field: DistortionField, cache: PreprocessCache | None, k: int) -> np.ndarray:
    n = field.n_points
    if k >= n:
        raise ParamError(f"k={k} is not smaller than N={n}")
    if cache is not None and cache.knn_low is not None and cache.knn_low.k >= k:
        return cache.knn("low", k)
    return knn_from_distances(compute_distance_matrix(field.embedding), k).indices


def reliability_map(field: DistortionField, cache: PreprocessCache | None = None,
                    cfg: VizConfig = VizConfig()) -> str:
    """kNN graph of the embedding; each edge fades from its source point's color."""
    knn = _embedding_knn(field, cache, cfg.k)
    px = _viewport(field.embedding, cfg)
    colors = [to_hex(c) for c in colormap(field.false_values, field.missing_values, cfg)]
    defs, edges = ["<defs>"], ['<g class="edges" stroke-width="1">']
    for i, row in enumerate(knn):
        for c, j in enumerate(row):
            gid = f"e{i}_{c}"
            (x1, y1), (x2, y2) = px[i], px[j]
            defs.append(
                f'<linearGradient id="{gid}" gradientUnits="userSpaceOnUse" '
                f'x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}">'
                f'<stop offset="0" stop-color="{colors[i]}" stop-opacity="1"/>'
                f'<stop offset="1" stop-color="{colors[i]}" stop-opacity="0"/>'
                "</linearGradient>"
            )
            edges.append(
                f'<line data-source="{i}" data-target="{int(j)}" x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
                f'x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="url(#{gid})"/>'
            )
    defs.append("</defs>")
    edges.append("</g>")
    lines = _header(cfg, "reliability-map") + defs + edges + _glyphs(px, cfg) + ["</svg>"]
    return "\n".join(lines) + "\n"
