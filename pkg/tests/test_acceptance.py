"""Acceptance suite.  One test per criterion; the outcome lines are printed in
the terminal summary (see ``conftest.py``)."""
import time
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import random_instance
from drdist import MEASURE_IDS, Engine, lookup, run_standalone
from drdist.bench import FIVE_MEASURES, run_benchmark, synthetic_dataset
from drdist.distvis import DistortionField, VizConfig, checkviz, reliability_map
from drdist.measures.global_ import _correlation
from drdist.preprocess import (
    compute_distance_matrix,
    compute_knn,
    compute_rank_matrix,
    knn_from_distances,
)

REL = 1e-9
TINY = 1e-12  # absolute floor for scores that land on zero


def close(a, b, rel=REL):
    return abs(a - b) <= max(rel * max(abs(a), abs(b)), TINY)


def _oracle_case(mid, x, y, lab, rng):
    """Random parameters for ``mid`` and the oracle's expected globals."""
    n = len(x)
    k = int(rng.integers(2, (n - 1) // 2 + 1))
    if mid == "tnc":
        t, c = oracles.tnc(x, y, k)
        return {"k": k}, {"trustworthiness": t, "continuity": c}
    if mid == "ca_tnc":
        t, c = oracles.ca_tnc(x, y, k, lab)
        return {"k": k}, {"ca_trustworthiness": t, "ca_continuity": c}
    if mid == "mrre":
        f, m = oracles.mrre(x, y, k)
        return {"k": k}, {"mrre_false": f, "mrre_missing": m}
    if mid == "lcmc":
        return {"k": k}, {"lcmc": oracles.lcmc(x, y, k)}
    if mid == "nh":
        return {"k": k}, {"neighborhood_hit": oracles.neighborhood_hit(y, list(lab), k)}
    if mid == "nd":
        return {"k": k}, {"neighbor_dissimilarity": oracles.neighbor_dissimilarity(x, y, k)}
    if mid == "procrustes":
        return {"k": k}, {"procrustes": oracles.procrustes(x, y, k)}
    if mid == "snc":
        params = {"k": k, "iterations": int(rng.integers(5, 31)), "seed": int(rng.integers(1000)),
                  "clustering": str(rng.choice(["hdbscan", "kmeans"])), "min_cluster_size": 3,
                  "walk_length": int(rng.integers(5, 31)), "n_clusters": 2}
        s, c = oracles.steadiness_cohesiveness(x, y, **params)
        return params, {"steadiness": s, "cohesiveness": c}
    if mid == "dsc":
        return {}, {"distance_consistency": oracles.distance_consistency(y, list(lab))}
    if mid == "ivm":
        variant = str(rng.choice(["silhouette", "calinski_harabasz", "davies_bouldin"]))
        fn = {"silhouette": oracles.silhouette, "calinski_harabasz": oracles.calinski_harabasz,
              "davies_bouldin": oracles.davies_bouldin}[variant]
        return {"variant": variant}, {"ivm": fn(y, list(lab))}
    if mid == "cvm":
        from sklearn.cluster import KMeans

        external, seed = str(rng.choice(["ari", "nmi"])), int(rng.integers(1000))
        n_classes = len(set(lab.tolist()))
        # the clustering step is a black box; the score computed on its output is checked
        pred = KMeans(n_classes, init="k-means++", n_init=1, max_iter=300, tol=1e-6,
                      random_state=seed).fit_predict(y)
        fn = oracles.adjusted_rand if external == "ari" else oracles.normalized_mutual_info
        return {"external": external, "seed": seed}, {"cvm": fn(list(lab), list(pred))}
    if mid == "stress":
        return {}, {"stress": oracles.stress(x, y)}
    if mid == "kl_div":
        sigma = float(rng.uniform(0.05, 0.5))
        return {"sigma": sigma}, {"kl_divergence": oracles.kl_div(x, y, sigma)}
    if mid == "dtm":
        sigma = float(rng.uniform(0.05, 0.5))
        return {"sigma": sigma}, {"dtm": oracles.dtm(x, y, sigma)}
    if mid == "topo":
        return {}, {"topographic_product": oracles.topographic_product(x, y)}
    if mid == "pearson_r":
        return {}, {"pearson_r": oracles.pearson_r(x, y)}
    if mid == "spearman_rho":
        return {}, {"spearman_rho": oracles.spearman_rho(x, y)}
    raise AssertionError(mid)


@pytest.mark.criterion(1, "oracle equivalence (17 measures x 50 instances, rel 1e-9, < 1 min)")
def test_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    failures = []
    for mid in MEASURE_IDS:
        for _ in range(50):
            x, y, lab = random_instance(rng)
            params, expected = _oracle_case(mid, x, y, lab, rng)
            got = run_standalone(mid, x, y, params, lab).globals
            assert set(got) == set(expected)
            failures += [(mid, name, got[name], v) for name, v in expected.items()
                         if not close(got[name], v)]
    elapsed = time.perf_counter() - t0
    assert not failures, failures[:5]
    assert elapsed < 60, f"took {elapsed:.1f}s"


@pytest.mark.criterion(2, "identity suite (Y = X, 1e-12)")
def test_identity_suite():
    rng = np.random.default_rng(3)
    for n, k in ((30, 5), (60, 10)):
        x = np.vstack([rng.normal(size=(n // 2, 6)), rng.normal(size=(n // 2, 6)) + 8])
        lab = np.repeat([0, 1], n // 2)
        g = lambda mid, params=None, labels=lab: run_standalone(mid, x, x, params, labels).globals
        exact = {
            "tnc": {"trustworthiness": 1.0, "continuity": 1.0},
            "mrre": {"mrre_false": 1.0, "mrre_missing": 1.0},
            "ca_tnc": {"ca_trustworthiness": 1.0, "ca_continuity": 1.0},
            "lcmc": {"lcmc": 1 - k / (n - 1)},
            "nd": {"neighbor_dissimilarity": 0.0},
            "procrustes": {"procrustes": 0.0},
        }
        for mid, want in exact.items():
            got = g(mid, {"k": k})
            assert all(abs(got[name] - v) <= 1e-12 for name, v in want.items()), (mid, got)
        assert g("nh", {"k": k}, np.zeros(n, int)) == {"neighborhood_hit": 1.0}
        got = g("snc", {"k": k, "iterations": 50, "seed": 11})
        assert got == {"steadiness": 1.0, "cohesiveness": 1.0}
        for mid, name, want in (("stress", "stress", 0.0), ("kl_div", "kl_divergence", 0.0),
                                ("dtm", "dtm", 0.0), ("topo", "topographic_product", 0.0),
                                ("pearson_r", "pearson_r", 1.0),
                                ("spearman_rho", "spearman_rho", 1.0)):
            assert abs(g(mid)[name] - want) <= 1e-12, mid


def _all_measures_spec(rng, n):
    spec = []
    for mid in MEASURE_IDS:
        params = {}
        if "k" in lookup(mid).params:
            params["k"] = int(rng.integers(2, (n - 1) // 2 + 1))
        if mid == "snc":
            params.update(iterations=25, min_cluster_size=3)
        spec.append({"id": mid, "params": params})
    return spec


@pytest.mark.criterion(3, "scheduler equivalence (all 17 measures, 10 datasets, rel 1e-12)")
def test_scheduler_equivalence():
    rng = np.random.default_rng(99)
    for _ in range(10):
        n = int(rng.integers(20, 61))
        x, y, lab = random_instance(rng, n=n, high_dim=int(rng.integers(3, 12)))
        spec = _all_measures_spec(rng, n)
        outs = Engine(spec, x, lab).run(y)
        for entry, o in zip(spec, outs):
            alone = run_standalone(entry["id"], x, y, entry["params"], lab).globals
            for name, v in alone.items():
                assert close(o.globals[name], v, rel=1e-12), (entry, name)


@pytest.mark.criterion(4, "kNN slicing (sliced tables exactly equal)")
@settings(max_examples=150, deadline=None)
@given(arrays(np.int8, st.tuples(st.integers(3, 25), st.integers(1, 3)),
              elements=st.integers(-3, 3)), st.data())
def test_knn_slicing(points, data):
    # small integer grids give plenty of distance ties
    n = len(points)
    d = compute_distance_matrix(points.astype(float))
    r = compute_rank_matrix(d)
    k1 = data.draw(st.integers(1, n - 1))
    k2 = data.draw(st.integers(1, k1))
    wide = compute_knn(r, k1)
    direct = compute_knn(r, k2)
    assert np.array_equal(wide.sliced(k2).indices, direct.indices)
    assert np.array_equal(wide.indices[:, :k2], direct.indices)
    assert np.array_equal(knn_from_distances(d, k1).indices[:, :k2], direct.indices)
    assert np.array_equal(direct.indices, np.array(oracles.knn(d.values.tolist(), k2)))


def _slope(ns, values):
    return np.polyfit(np.asarray(ns, float), np.asarray(values, float), 1)[0]


@pytest.mark.slow
@pytest.mark.criterion(5, "runtime (N=5000 speedup >= 1.2x over 5 reps; non-decreasing trend)")
def test_runtime_speedup():
    report = run_benchmark(synthetic_dataset(5000, dim=50), FIVE_MEASURES, repetitions=5, seed=1)
    print(f"N=5000 speedup {report['speedup']:.3f}")
    assert report["max_score_gap"] == 0.0
    assert report["speedup"] >= 1.2
    ns = (1000, 2000, 4000, 8000)
    speedups = []
    for n in ns:
        reps = 3 if n <= 2000 else 2
        r = run_benchmark(synthetic_dataset(n, dim=50, seed=n), FIVE_MEASURES, reps, seed=n)
        speedups.append(r["speedup"])
        print(f"N={n} speedup {r['speedup']:.3f}")
    assert _slope(ns, speedups) >= 0


@pytest.mark.criterion(6, "local-distortion contract (mean(locals) = global, 1e-9)")
def test_local_contract():
    rng = np.random.default_rng(6)
    for _ in range(5):
        n = int(rng.integers(30, 80))
        x, y, lab = random_instance(rng, n=n)
        spec = _all_measures_spec(rng, n)
        outs = Engine(spec, x, lab, return_local=True).run(y)
        for o in outs:
            if not lookup(o.id).supports_local:
                assert o.locals is None, o.id
                continue
            assert set(o.locals) == set(o.globals)
            for name, values in o.locals.items():
                assert values.shape == (n,)
                assert close(float(values.mean()), o.globals[name]), (o.id, name)


@pytest.mark.criterion(7, "visualization structure (N cells, N*k edges, XML, white, deterministic)")
def test_visualization_structure():
    rng = np.random.default_rng(7)
    ns = "{http://www.w3.org/2000/svg}"
    for n, k in ((10, 1), (120, 5), (400, 8)):
        emb = rng.normal(size=(n, 2))
        field = DistortionField(emb, rng.random(n), rng.random(n))
        cfg = VizConfig(k=k)
        cv, rm = checkviz(field, cfg), reliability_map(field, cfg=cfg)
        assert len(list(ET.fromstring(cv).iter(ns + "polygon"))) == n
        assert len(list(ET.fromstring(rm).iter(ns + "line"))) == n * k
        assert cv == checkviz(field, cfg) and rm == reliability_map(field, cfg=cfg)
        zero = DistortionField(emb, np.zeros(n), np.zeros(n))
        fills = {p.get("fill") for p in ET.fromstring(checkviz(zero, cfg)).iter(ns + "polygon")}
        assert fills == {"#ffffff"}
        stops = {s.get("stop-color")
                 for s in ET.fromstring(reliability_map(zero, cfg=cfg)).iter(ns + "stop")}
        assert stops == {"#ffffff"}


def _rotation(rng, dim):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q


RANK_MEASURES = ("tnc", "mrre", "lcmc", "nd", "ca_tnc", "nh", "topo", "spearman_rho")


@pytest.mark.criterion(8, "invariance (scaling, positive affine, rigid)")
def test_invariance():
    rng = np.random.default_rng(8)
    for _ in range(10):
        x, y, lab = random_instance(rng, n=int(rng.integers(15, 50)))
        params = {"k": 4}
        for mid in RANK_MEASURES:
            p = {} if mid in ("topo", "spearman_rho") else params
            base = run_standalone(mid, x, y, p, lab).globals
            for a, b in ((x * 3.7, y), (x, y * 0.02), (x * 1e3, y * 1e-3)):
                got = run_standalone(mid, a, b, p, lab).globals
                assert all(close(got[n_], v, rel=1e-12) for n_, v in base.items()), mid
        scale, shift = float(rng.uniform(0.1, 10)), float(rng.uniform(0, 5))
        r = run_standalone("pearson_r", x, scale * x + shift).globals["pearson_r"]
        assert abs(r - 1.0) <= 1e-12
        d = compute_distance_matrix(x).values[np.triu_indices(len(x), 1)]
        assert abs(_correlation(d, scale * d + shift) - 1.0) <= 1e-12
        base = run_standalone("dsc", x, y, labels=lab).globals
        moved = y @ _rotation(rng, 2) + rng.normal(scale=10, size=2)
        assert run_standalone("dsc", x, moved, labels=lab).globals == base
