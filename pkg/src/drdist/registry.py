"""Static catalogue of the 17 measures and what each one needs."""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping

from .errors import ConfigError, NotFoundError, ParamError
from .measures import cluster, global_, local

HIGHER = "higher_better"
LOWER = "lower_better"
SIGNED = "zero_best"  # topographic product: 0 is perfect, sign carries meaning


@dataclass(frozen=True)
class ParamSpec:
    kind: type
    default: Any
    minimum: float | None = None
    choices: tuple | None = None
    optional: bool = False

    def check(self, name: str, value):
        if value is None:
            if self.optional:
                return None
            raise ParamError(f"parameter {name!r} may not be null")
        if self.kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                if isinstance(value, float) and value.is_integer():
                    value = int(value)
                else:
                    raise ParamError(f"parameter {name!r} must be an integer, got {value!r}")
        elif self.kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParamError(f"parameter {name!r} must be a number, got {value!r}")
            value = float(value)
        elif self.kind is str and not isinstance(value, str):
            raise ParamError(f"parameter {name!r} must be a string, got {value!r}")
        if self.choices is not None and value not in self.choices:
            raise ParamError(f"parameter {name!r} must be one of {self.choices}, got {value!r}")
        if self.minimum is not None and value < self.minimum:
            raise ParamError(f"parameter {name!r} must be >= {self.minimum}, got {value!r}")
        return value


@dataclass(frozen=True)
class MeasureDescriptor:
    id: str
    name: str
    family: str
    requires: frozenset[str]
    params: Mapping[str, ParamSpec]
    orientation: Mapping[str, str]
    func: Callable = field(repr=False, compare=False)
    needs_labels: bool = False
    supports_local: bool = False
    # (false-neighbor score, missing-neighbor score) for visualizations
    local_pair: tuple[str, str] | None = None

    def resolve(self, params: Mapping[str, Any] | None) -> dict[str, Any]:
        """Fill defaults and type-check; undeclared names are rejected."""
        params = dict(params or {})
        unknown = set(params) - set(self.params)
        if unknown:
            raise ConfigError(
                f"{self.id} does not accept {sorted(unknown)}; "
                f"known parameters: {sorted(self.params)}"
            )
        return {
            name: ps.check(name, params.get(name, ps.default))
            for name, ps in self.params.items()
        }

    @property
    def uses_knn(self) -> bool:
        return "knn_high" in self.requires or "knn_low" in self.requires

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "family": self.family,
            "requires": sorted(self.requires),
            "needs_labels": self.needs_labels,
            "supports_local": self.supports_local,
            "params": {
                n: {"type": p.kind.__name__, "default": p.default,
                    **({"min": p.minimum} if p.minimum is not None else {}),
                    **({"choices": list(p.choices)} if p.choices else {})}
                for n, p in self.params.items()
            },
            "orientation": dict(self.orientation),
        }


DEFAULT_K = 20
DEFAULT_SEED = 42

_K = ParamSpec(int, DEFAULT_K, minimum=1)
_SEED = ParamSpec(int, DEFAULT_SEED, minimum=0)
_SIGMA = ParamSpec(float, 0.1)

_DIST = frozenset({"dist_high", "dist_low"})
_RANK = _DIST | {"rank_high", "rank_low"}
_KNN = _DIST | {"knn_high", "knn_low"}


def _d(id, name, family, requires, func, orientation, params=None, **kw):
    return MeasureDescriptor(
        id=id, name=name, family=family, requires=frozenset(requires),
        params=MappingProxyType(params or {}), orientation=MappingProxyType(orientation),
        func=func, **kw,
    )


_ALL = [
    # local
    _d("tnc", "Trustworthiness & Continuity", "local", _RANK | _KNN, local.tnc,
       {"trustworthiness": HIGHER, "continuity": HIGHER}, {"k": _K},
       supports_local=True, local_pair=("trustworthiness", "continuity")),
    _d("mrre", "Mean Relative Rank Errors", "local", _RANK | _KNN, local.mrre,
       {"mrre_false": HIGHER, "mrre_missing": HIGHER}, {"k": _K},
       supports_local=True, local_pair=("mrre_false", "mrre_missing")),
    _d("lcmc", "Local Continuity Meta-Criteria", "local", _KNN, local.lcmc,
       {"lcmc": HIGHER}, {"k": _K}, supports_local=True),
    _d("nh", "Neighborhood Hit", "local", {"dist_low", "knn_low"},
       local.neighborhood_hit, {"neighborhood_hit": HIGHER}, {"k": _K},
       needs_labels=True, supports_local=True),
    _d("nd", "Neighbor Dissimilarity", "local", _KNN, local.neighbor_dissimilarity,
       {"neighbor_dissimilarity": LOWER}, {"k": _K}),
    _d("ca_tnc", "Class-Aware Trustworthiness & Continuity", "local", _RANK | _KNN,
       local.ca_tnc, {"ca_trustworthiness": HIGHER, "ca_continuity": HIGHER},
       {"k": _K}, needs_labels=True, supports_local=True,
       local_pair=("ca_trustworthiness", "ca_continuity")),
    _d("procrustes", "Procrustes Measure", "local", {"dist_high", "knn_high"},
       local.procrustes, {"procrustes": LOWER}, {"k": ParamSpec(int, DEFAULT_K, minimum=2)}),
    # cluster-level
    _d("snc", "Steadiness & Cohesiveness", "cluster", _KNN, cluster.snc,
       {"steadiness": HIGHER, "cohesiveness": HIGHER},
       {"k": _K, "iterations": ParamSpec(int, 200, minimum=1),
        "clustering": ParamSpec(str, "hdbscan", choices=cluster.CLUSTERINGS),
        "seed": _SEED, "min_cluster_size": ParamSpec(int, 5, minimum=2),
        "walk_length": ParamSpec(int, 30, minimum=1),
        "n_clusters": ParamSpec(int, 3, minimum=2)},
       supports_local=True, local_pair=("steadiness", "cohesiveness")),
    _d("dsc", "Distance Consistency", "cluster", (), cluster.dsc,
       {"distance_consistency": HIGHER}, needs_labels=True),
    _d("ivm", "Internal Clustering Validation Measures", "cluster", (), cluster.ivm,
       {"ivm": HIGHER}, {"variant": ParamSpec(str, "silhouette", choices=cluster.IVM_VARIANTS)},
       needs_labels=True),
    _d("cvm", "Clustering + External Clustering Validation Measures", "cluster", (),
       cluster.cvm, {"cvm": HIGHER},
       {"external": ParamSpec(str, "ari", choices=cluster.EXTERNAL_VALIDATIONS),
        "n_clusters": ParamSpec(int, None, minimum=2, optional=True), "seed": _SEED},
       needs_labels=True),
    # global
    _d("stress", "Stress", "global", _DIST, global_.stress, {"stress": LOWER}),
    _d("kl_div", "Kullback-Leibler Divergence", "global", _DIST, global_.kl_div,
       {"kl_divergence": LOWER}, {"sigma": _SIGMA}),
    _d("dtm", "Distance-to-Measure", "global", _DIST, global_.dtm, {"dtm": LOWER},
       {"sigma": _SIGMA}),
    _d("topo", "Topographic Product", "global", _RANK, global_.topographic_product,
       {"topographic_product": SIGNED},
       {"max_k": ParamSpec(int, None, minimum=1, optional=True)}),
    _d("pearson_r", "Pearson's correlation coefficient r", "global", _DIST,
       global_.pearson_r, {"pearson_r": HIGHER}),
    _d("spearman_rho", "Spearman's rank correlation coefficient rho", "global", _DIST,
       global_.spearman_rho, {"spearman_rho": HIGHER}),
]

REGISTRY: Mapping[str, MeasureDescriptor] = MappingProxyType({d.id: d for d in _ALL})
MEASURE_IDS: tuple[str, ...] = tuple(REGISTRY)


def lookup(measure_id: str) -> MeasureDescriptor:
    try:
        return REGISTRY[measure_id]
    except KeyError:
        raise NotFoundError(
            f"unknown measure {measure_id!r}; valid ids: {', '.join(MEASURE_IDS)}"
        ) from None


def dump() -> list[dict]:
    return [d.to_json() for d in _ALL]
