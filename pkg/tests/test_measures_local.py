import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_instance
from drdist import run_standalone
from drdist.errors import MissingLabelsError, ParamError


def scores(mid, x, y, params=None, labels=None):
    return run_standalone(mid, x, y, params, labels, return_local=True)


@pytest.mark.parametrize("k", [1, 3, 7])
def test_tnc_identity(rng, k):
    x = rng.normal(size=(20, 4))
    assert scores("tnc", x, x, {"k": k}).globals == {"trustworthiness": 1.0, "continuity": 1.0}


def test_tnc_swapped_tail_golden():
    x = np.array([[0.0], [1], [2], [3], [10]])
    y = np.array([[0.0], [1], [2], [10], [3]])
    g = scores("tnc", x, y, {"k": 1}).globals
    # false neighbors 3->4 (rank 4) and 4->2 (rank 2): 1 - (3 + 1) / 15
    assert g["trustworthiness"] == pytest.approx(0.7333333333333334, rel=1e-12)
    assert g["continuity"] == pytest.approx(0.7333333333333334, rel=1e-12)


def test_tnc_code1_k(rng):
    x = rng.normal(size=(41, 6))
    g = scores("tnc", x, x[:, :2], {"k": 20}).globals
    assert 0 <= g["trustworthiness"] <= 1


def test_tnc_rejects_half_n(rng):
    x = rng.normal(size=(10, 3))
    with pytest.raises(ParamError):
        scores("tnc", x, x, {"k": 5})


def test_mrre_identity(rng):
    x = rng.normal(size=(15, 3))
    assert scores("mrre", x, x, {"k": 4}).globals == {"mrre_false": 1.0, "mrre_missing": 1.0}


def test_mrre_small_golden():
    x = np.array([[0, 0, 1], [2, 1, 0], [1, 3, 2], [4, 0, 3], [3, 2, 5], [0, 4, 1]], float)
    y = np.array([[0, 0], [1, 2], [3, 1], [2, 4], [4, 3], [1, 5]], float)
    g = scores("mrre", x, y, {"k": 2}).globals
    assert g["mrre_false"] == pytest.approx(0.7051282051282051, rel=1e-12)
    assert g["mrre_missing"] == pytest.approx(0.717948717948718, rel=1e-12)


def test_mrre_code3_locals_length(rng):
    x = rng.normal(size=(60, 5))
    out = scores("mrre", x, x[:, :2], {"k": 30})
    assert out.locals["mrre_false"].shape == (60,)


def test_lcmc_identity_and_disjoint():
    line = np.array([[0.0], [1], [3], [4]])
    assert scores("lcmc", line, line, {"k": 1}).globals["lcmc"] == pytest.approx(2 / 3, abs=1e-15)
    swapped = np.array([[0.0], [3], [1], [4]])  # 1-NN pairs (0,1),(2,3) become (0,2),(1,3)
    assert scores("lcmc", line, swapped, {"k": 1}).globals["lcmc"] == pytest.approx(-1 / 3, abs=1e-15)


def test_lcmc_random_oracle(rng):
    x, y, _ = random_instance(rng, n=25)
    assert scores("lcmc", x, y, {"k": 5}).globals["lcmc"] == pytest.approx(oracles.lcmc(x, y, 5), rel=1e-12)


def test_nh_examples(rng):
    x = rng.normal(size=(20, 3))
    assert scores("nh", x, x, {"k": 4}, np.zeros(20, int)).globals["neighborhood_hit"] == 1.0
    blobs = np.vstack([rng.normal(size=(10, 2)) * 0.1, rng.normal(size=(10, 2)) * 0.1 + 50])
    lab = np.repeat([0, 1], 10)
    assert scores("nh", blobs, blobs, {"k": 5}, lab).globals["neighborhood_hit"] == 1.0
    x, y, lab = random_instance(rng, n=30)
    got = scores("nh", x, y, {"k": 5}, lab).globals["neighborhood_hit"]
    assert got == pytest.approx(oracles.neighborhood_hit(y, list(lab), 5), rel=1e-12)
    with pytest.raises(MissingLabelsError):
        scores("nh", x, y, {"k": 5})


def test_nd_identity_scaling_and_oracle(rng):
    x = rng.normal(size=(20, 3))
    assert scores("nd", x, x, {"k": 4}).globals["neighbor_dissimilarity"] == 0.0
    assert scores("nd", x, 3.7 * x, {"k": 4}).globals["neighbor_dissimilarity"] == 0.0
    x, y, _ = random_instance(rng, n=20)
    got = scores("nd", x, y, {"k": 4}).globals["neighbor_dissimilarity"]
    assert got == pytest.approx(oracles.neighbor_dissimilarity(x, y, 4), rel=1e-12)
    assert scores("nd", x, y, {"k": 4}).locals is None


def test_ca_tnc_examples(rng):
    x, y, lab = random_instance(rng, n=20, n_classes=2)
    assert scores("ca_tnc", x, x, {"k": 3}, lab).globals == {
        "ca_trustworthiness": 1.0, "ca_continuity": 1.0}
    assert scores("ca_tnc", x, y, {"k": 3}, np.zeros(20, int)).globals == {
        "ca_trustworthiness": 1.0, "ca_continuity": 1.0}
    got = scores("ca_tnc", x, y, {"k": 3}, lab).globals
    exp = oracles.ca_tnc(x, y, 3, lab)
    assert got["ca_trustworthiness"] == pytest.approx(exp[0], rel=1e-12)
    assert got["ca_continuity"] == pytest.approx(exp[1], rel=1e-12)


def test_ca_tnc_equals_tnc_when_labels_all_distinct(rng):
    x, y, _ = random_instance(rng, n=18)
    lab = np.arange(18)
    ca = scores("ca_tnc", x, y, {"k": 4}, lab).globals
    t = scores("tnc", x, y, {"k": 4}).globals
    assert ca["ca_trustworthiness"] == t["trustworthiness"]
    assert ca["ca_continuity"] == t["continuity"]


def _rotation(rng, dim):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q


def test_procrustes_examples(rng):
    x = rng.normal(size=(30, 3))
    assert scores("procrustes", x, x, {"k": 5}).globals["procrustes"] < 1e-12
    y = 2.5 * x @ _rotation(rng, 3) + 7.0
    assert scores("procrustes", x, y, {"k": 5}).globals["procrustes"] < 1e-12
    x, y = rng.normal(size=(15, 4)), rng.normal(size=(15, 2))
    got = scores("procrustes", x, y, {"k": 5}).globals["procrustes"]
    assert got == pytest.approx(oracles.procrustes(x, y, 5), rel=1e-10)
    with pytest.raises(ParamError):
        scores("procrustes", x, y, {"k": 1})


def test_procrustes_zero_variance_neighborhood():
    x = np.array([[0.0, 0], [0, 0], [0, 0], [5, 5], [5, 5.1], [5.2, 5]])
    y = np.array([[0.0], [1], [2], [3], [4], [5]])
    assert np.isfinite(scores("procrustes", x, y, {"k": 2}).globals["procrustes"])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_scores_in_unit_interval_and_locals_average(seed):
    rng = np.random.default_rng(seed)
    x, y, lab = random_instance(rng)
    n = len(x)
    k = int(rng.integers(1, (n - 1) // 2 + 1))
    for mid, labels in (("tnc", None), ("mrre", None), ("lcmc", None), ("nh", lab), ("ca_tnc", lab)):
        out = scores(mid, x, y, {"k": k}, labels)
        for name, g in out.globals.items():
            if mid != "lcmc":
                assert 0.0 <= g <= 1.0
            assert np.mean(out.locals[name]) == pytest.approx(g, rel=1e-9, abs=1e-12)


def test_swap_symmetry(rng):
    x, y, _ = random_instance(rng, n=30)
    a = scores("tnc", x, y, {"k": 6}).globals
    b = scores("tnc", y, x, {"k": 6}).globals
    assert a["trustworthiness"] == b["continuity"] and a["continuity"] == b["trustworthiness"]
    a = scores("mrre", x, y, {"k": 6}).globals
    b = scores("mrre", y, x, {"k": 6}).globals
    assert a["mrre_false"] == b["mrre_missing"] and a["mrre_missing"] == b["mrre_false"]
