import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from adhoc_beam.selection import (SelectionVector, channel_affinity, default_n,
                                  lifetime_cluster, lifetime_cut, odds_ratio, select,
                                  select_1best, select_all, select_auto_n, select_by_clusters,
                                  select_fixed_n, select_learning_n, select_soft_n,
                                  spectral_embed)

qs = arrays(float, st.integers(1, 12), elements=st.floats(0.0, 1.0))


def test_1best():
    assert select_1best([0.2, 0.9, 0.5]).p.tolist() == [0, 1, 0]
    assert select_1best([0.7, 0.7]).p.tolist() == [1, 0]
    assert select_1best([0.3]).p.tolist() == [1]


def test_all():
    assert select_all(3).p.tolist() == [1, 1, 1]
    assert select_all(1).p.tolist() == [1]
    with pytest.raises(ValueError):
        select_all(0)


def test_fixed_n():
    assert select_fixed_n([.1, .9, .5, .7], 2).p.tolist() == [0, 1, 0, 1]
    assert select_fixed_n([.1, .9, .5], 3).p.tolist() == [1, 1, 1]
    assert select_fixed_n(np.linspace(0, 1, 16)).n_selected == 4
    assert default_n(16) == 4
    # tie at the cut keeps the lower index
    assert select_fixed_n([.5, .9, .5], 2).p.tolist() == [1, 1, 0]
    with pytest.raises(ValueError):
        select_fixed_n([.1, .2], 3)
    with pytest.raises(ValueError):
        select_fixed_n([.1, .2], 0)


def test_auto_n_example():
    np.testing.assert_allclose(odds_ratio([0.9, 0.8, 0.5]), [1, 4 / 9, 1 / 9])
    assert select_auto_n([0.9, 0.8, 0.5], 0.5).p.tolist() == [1, 0, 0]
    assert select_auto_n([0.9, 0.8, 0.5], 0.0).n_selected == 3
    assert select_auto_n([0.4, 0.4, 0.4], 0.99).n_selected == 3


def test_auto_n_saturated_weights():
    # q = 1 is clamped; the argmax always survives
    assert select_auto_n([1.0, 1.0, 0.2], 0.5).p.tolist() == [1, 1, 0]
    assert select_auto_n([0.0, 0.0], 0.5).p.tolist() == [1, 1]
    assert select_auto_n([0.9, 0.3], 1.0).p.tolist() == [1, 0]
    with pytest.raises(ValueError):
        select_auto_n([0.5], 1.5)


def test_soft_n_example():
    np.testing.assert_allclose(select_soft_n([0.9, 0.8, 0.5], 0.3).p, [0.9, 0.8, 0])
    p = select_soft_n([0.6, 0.5, 0.55], 1 - 1e-9).p
    np.testing.assert_allclose(p, [0.6, 0, 0])


def test_soft_n_zero_weights_keep_auto_support():
    np.testing.assert_allclose(select_soft_n([0.0, 0.0]).p, [1e-9, 1e-9])


def test_selection_vector_validation():
    with pytest.raises(ValueError):
        SelectionVector([0, 0])
    with pytest.raises(ValueError):
        SelectionVector([1.2])
    s = SelectionVector([0, 1], "x")
    d = json.loads(s.to_json(q=[0.1, 0.2]))
    assert d["p"] == [0, 1] and d["q"] == [0.1, 0.2]


def _coherent(M, T=200, F=9, seed=0):
    r = np.random.default_rng(seed)
    s = r.standard_normal((T, F)) + 1j * r.standard_normal((T, F))
    return np.stack([s] * M)


def test_affinity_identical_channels():
    K, A = channel_affinity(_coherent(3), sigma=1.0)
    np.testing.assert_allclose(K, 1.0)
    np.testing.assert_allclose(A, np.where(np.eye(3) > 0, 1.0, np.exp(-0.5)))


def test_affinity_independent_channels():
    r = np.random.default_rng(1)
    y = r.standard_normal((2, 10_000, 5)) + 1j * r.standard_normal((2, 10_000, 5))
    K, A = channel_affinity(y)
    assert K[0, 1] < 0.05 and A[0, 1] > 0.99


def test_affinity_single_channel_and_silent_bins():
    K, A = channel_affinity(_coherent(1))
    assert K.tolist() == [[1.0]] and A.tolist() == [[1.0]]
    y = _coherent(2)
    y[1, :, 0] = 0      # bin excluded, not a crash
    K, _ = channel_affinity(y)
    assert K[0, 1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        channel_affinity(np.zeros((2, 3, 4)))


def test_embedding_block_diagonal():
    A = np.zeros((8, 8))
    A[:4, :4] = 1.0
    A[4:, 4:] = 1.0
    U = spectral_embed(A, 2).U
    cos = U.T @ U
    assert np.all(np.abs(cos[:4, 4:]) < 0.1)
    assert np.all(cos[:4, :4] > 0.99)


def test_embedding_symmetric_mics():
    A = 0.5 * np.eye(6) + 0.5
    U = spectral_embed(A, 1).U
    np.testing.assert_allclose(U, np.repeat(U[:, :1], 6, axis=1), atol=1e-6)
    with pytest.raises(ValueError):
        spectral_embed(A, 7)


def test_embedding_permutation_equivariant():
    r = np.random.default_rng(3)
    B = r.random((6, 6))
    A = 0.5 * (B + B.T)
    perm = r.permutation(6)
    U = spectral_embed(A, 3).U
    Up = spectral_embed(A[np.ix_(perm, perm)], 3).U
    np.testing.assert_allclose(Up, U[:, perm], atol=1e-9)


def test_lifetime_two_groups():
    r = np.random.default_rng(0)
    pts = np.concatenate([r.normal(0, 0.1, (4, 2)), r.normal(10, 0.1, (3, 2))])
    labels = lifetime_cluster(pts.T)
    assert labels.tolist() == [0, 0, 0, 0, 1, 1, 1]


def test_lifetime_degenerate_cases():
    assert lifetime_cluster(np.zeros((2, 5))).tolist() == [0] * 5
    assert sorted(lifetime_cluster(np.array([[0.0, 1.0]])).tolist()) == [0, 1]
    assert lifetime_cut([]) == 1
    assert lifetime_cut([0, 0, 0]) == 1
    # gaps 1, 0.1, 5 -> cut below the last merge: 2 clusters
    assert lifetime_cut([1.0, 1.1, 6.1]) == 2


def test_learning_n_single_cluster_is_all():
    y = _coherent(4)
    q = [0.9, 0.2, 0.4, 0.1]
    # with identical channels only the leading eigenvector is determined
    sel = select_learning_n(y, q, J=1)
    assert sel.p.tolist() == select_all(4).p.tolist()


def test_by_clusters_rule():
    q = np.array([0.9, 0.8, 0.5, 0.4])
    assert select_by_clusters(q, [0, 0, 1, 1], 0.5).p.tolist() == [1, 1, 0, 0]
    # singleton clusters reduce to the auto-N rule
    for g in (0.1, 0.3, 0.5, 0.9):
        np.testing.assert_array_equal(select_by_clusters(q, np.arange(4), g).p,
                                      select_auto_n(q, g).p)


def test_learning_n_is_the_composition():
    r = np.random.default_rng(5)
    a = r.standard_normal((300, 9)) + 1j * r.standard_normal((300, 9))
    b = r.standard_normal((300, 9)) + 1j * r.standard_normal((300, 9))
    y = np.stack([a, a * 1.1 + 0.3 * b, 0.9 * a, b, b * 0.5, 1.2 * b + a])
    q = np.array([0.9, 0.3, 0.4, 0.5, 0.2, 0.45])
    _, A = channel_affinity(y, 1.0)
    labels = lifetime_cluster(spectral_embed(A, 3))
    sel = select_learning_n(y, q, gamma=0.5, sigma=1.0, J=3)
    np.testing.assert_array_equal(sel.clusters, labels)
    np.testing.assert_array_equal(sel.p, select_by_clusters(q, labels, 0.5).p)
    assert sel.p[0] == 1


def test_dispatch():
    q = [0.2, 0.9, 0.6, 0.8]
    assert select("1best", q).p.tolist() == [0, 1, 0, 0]
    assert select("fixedN", q, n=2).n_selected == 2
    with pytest.raises(ValueError):
        select("learningN", q)
    with pytest.raises(ValueError):
        select("bogus", q)


@given(qs, st.floats(0.0, 1.0))
def test_argmax_always_kept(q, gamma):
    for fn in (select_auto_n, select_soft_n):
        assert fn(q, gamma).p[np.argmax(q)] > 0


@given(qs, st.floats(0.0, 1.0))
def test_soft_and_auto_share_support(q, gamma):
    assume(np.max(q) > 0)
    np.testing.assert_array_equal(select_soft_n(q, gamma).p > 0, select_auto_n(q, gamma).p > 0)


@given(qs, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_auto_n_monotone_in_gamma(q, g1, g2):
    lo, hi = sorted((g1, g2))
    a, b = select_auto_n(q, lo).p > 0, select_auto_n(q, hi).p > 0
    assert np.all(b <= a)


@given(qs, st.data())
def test_permutation_equivariant(q, data):
    perm = data.draw(st.permutations(range(q.size)))
    perm = np.asarray(perm)
    assume(len(set(q.tolist())) == q.size)      # ties break by index
    for alg in ("1best", "fixedN", "autoN", "softN"):
        n = max(1, q.size // 2)
        np.testing.assert_array_equal(select(alg, q[perm], n=n).p, select(alg, q, n=n).p[perm])


@given(arrays(float, st.integers(1, 8), elements=st.floats(0.01, 100.0)),
       st.floats(0.01, 100.0), st.sampled_from([0.1, 0.5, 0.9]))
def test_odds_rule_is_energy_threshold(X, N, gamma):
    q = X / (X + N)
    lhs = select_auto_n(q, gamma).p > 0
    ratio = X / X.max()
    assume(np.all(np.abs(ratio - gamma) > 1e-6))
    np.testing.assert_array_equal(lhs, X > gamma * X.max())
