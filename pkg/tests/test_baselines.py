import itertools

import numpy as np
import pytest

from cortexvq.baselines import (
    CentroidCodebook,
    GaussianMixtureCodebook,
    birch,
    build_cf_tree,
    default_threshold,
    gmm_em,
    kmeans,
    lloyd,
    pnn,
)
from cortexvq.errors import CodebookLookupError, ConfigurationError, InfeasibleKError
from cortexvq.metrics import rmse_distortion

TOY = np.array([0.0, 1.0, 9.0, 10.0])


def sorted_centroids(cb):
    return sorted(np.ravel(cb.centroids).tolist())


def brute_force_sse(x, k=2):
    """Lowest SSE over every assignment of the points to k labelled clusters."""
    best = np.inf
    for labels in itertools.product(range(k), repeat=len(x)):
        labels = np.array(labels)
        sse = 0.0
        for j in range(k):
            m = x[labels == j]
            if m.size:
                sse += ((m - m.mean()) ** 2).sum()
        best = min(best, sse)
    return best


# k-means

@pytest.mark.parametrize("seed", range(6))
def test_kmeans_toy(seed):
    res = kmeans(TOY, 2, seed=seed)
    assert sorted_centroids(res.codebook) == [0.5, 9.5]
    assert res.sse == pytest.approx(brute_force_sse(TOY))
    assert res.converged


def test_kmeans_k_equals_n_and_k_one():
    x = np.random.default_rng(0).normal(size=(7, 3))
    res = kmeans(x, 7)
    assert res.sse == 0.0
    np.testing.assert_allclose(np.sort(res.codebook.centroids, axis=0), np.sort(x, axis=0))
    res = kmeans(x, 1)
    np.testing.assert_allclose(res.codebook.centroids[0], x.mean(0))


def test_kmeans_rejects_bad_k():
    with pytest.raises(ConfigurationError):
        kmeans(TOY, 5)
    with pytest.raises(ConfigurationError):
        kmeans(TOY, 0)


def test_kmeans_sse_non_increasing_and_deterministic():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(600, 4))
    a = kmeans(x, 12, seed=3)
    b = kmeans(x, 12, seed=3)
    assert np.all(np.diff(a.sse_history) <= 1e-9 * a.sse_history[0])
    np.testing.assert_array_equal(a.codebook.centroids, b.codebook.centroids)


def test_empty_cluster_moves_to_farthest_point():
    x = np.array([[0.0], [0.1], [0.2], [50.0]])
    # the second centroid starts where no point is nearest to it
    centroids, labels, *_ = lloyd(x, np.array([[0.1], [0.1]]))
    assert sorted(centroids.ravel().tolist()) == pytest.approx([0.1, 50.0])
    assert len(set(labels.tolist())) == 2


def test_one_dimensional_path_matches_general_path():
    # a zero second coordinate leaves distances unchanged but forces the general code path
    rng = np.random.default_rng(2)
    for trial in range(200):
        n = int(rng.integers(2, 60))
        k = int(rng.integers(1, min(n, 8) + 1))
        x = np.round(rng.normal(size=(n, 1)) * 4) / 2  # ties on purpose
        init = x[rng.choice(n, k, replace=False)]
        c1, l1, h1, *_ = lloyd(x, init)
        c2, l2, h2, *_ = lloyd(np.hstack([x, np.zeros_like(x)]), np.hstack([init, np.zeros_like(init)]))
        np.testing.assert_array_equal(l1, l2)
        np.testing.assert_allclose(c1[:, 0], c2[:, 0], atol=1e-9)


def test_kmeans_restarts_reach_optimum():
    rng = np.random.default_rng(3)
    hits, trials = 0, 100
    for _ in range(trials):
        n = int(rng.integers(4, 13))
        x = rng.normal(size=n) * rng.uniform(0.5, 5)
        res = kmeans(x, 2, seed=int(rng.integers(1 << 30)), n_init=20)
        hits += res.sse <= brute_force_sse(x) * (1 + 1e-9) + 1e-12
    assert hits / trials >= 0.95


# pnn

def naive_pnn(x, k):
    """Quadratic-per-step reference with the same Ward cost and lowest-index tie-break."""
    cents = [np.atleast_1d(v).astype(float) for v in x]
    sizes = [1.0] * len(cents)
    alive = list(range(len(cents)))
    while len(alive) > k:
        best = None
        for a, b in itertools.combinations(alive, 2):
            cost = sizes[a] * sizes[b] / (sizes[a] + sizes[b]) * ((cents[a] - cents[b]) ** 2).sum()
            if best is None or cost < best[0]:
                best = (cost, a, b)
        _, a, b = best
        cents[a] = (sizes[a] * cents[a] + sizes[b] * cents[b]) / (sizes[a] + sizes[b])
        sizes[a] += sizes[b]
        alive.remove(b)
    return sorted(tuple(cents[i]) for i in alive)


def test_pnn_toy():
    assert sorted_centroids(pnn(TOY, 2)) == [0.5, 9.5]
    assert sorted_centroids(pnn(TOY, 3)) == [0.5, 9.0, 10.0]
    cb = pnn(TOY, 4)
    np.testing.assert_array_equal(cb.centroids.ravel(), TOY)
    assert cb.meta["merges"] == 0


def test_pnn_matches_naive_reference():
    rng = np.random.default_rng(4)
    for _ in range(60):
        n = int(rng.integers(2, 25))
        dim = int(rng.integers(1, 4))
        k = int(rng.integers(1, n + 1))
        x = rng.normal(size=(n, dim))
        cb = pnn(x, k)
        assert cb.meta["merges"] == n - k
        got = sorted(tuple(r) for r in cb.centroids)
        np.testing.assert_allclose(got, naive_pnn(x, k), atol=1e-10)
        assert sum(cb.meta["sizes"]) == n


# birch

def test_birch_toy():
    tree = build_cf_tree(TOY, 0.6)
    entries = tree.leaf_entries()
    got = sorted((e[1][0] / e[0], e[0]) for e in entries)
    assert got == [(0.5, 2.0), (9.5, 2.0)]
    assert sorted_centroids(birch(TOY, threshold=0.6, k=2)) == [0.5, 9.5]


def test_birch_threshold_zero_equals_pnn():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(40, 2))
    for k in (1, 5, 17, 40):
        a = birch(x, threshold=0.0, branching=4, k=k)
        b = pnn(x, k)
        np.testing.assert_allclose(sorted(map(tuple, a.centroids)), sorted(map(tuple, b.centroids)),
                                   atol=1e-10)


def test_birch_infeasible_k():
    with pytest.raises(InfeasibleKError):
        birch(TOY, threshold=100.0, k=2)
    with pytest.raises(ConfigurationError):
        birch(TOY, threshold=-1.0, k=1)
    with pytest.raises(ConfigurationError):
        birch(TOY, threshold=0.1, branching=1, k=1)


def test_cf_statistics_match_subtree_points():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(300, 3))
    tree = build_cf_tree(x, threshold=0.4, branching=3)

    def points_under(node):
        if node.leaf:
            return [i for j in range(node.size) for i in node.children[j]]
        return [i for j in range(node.size) for i in points_under(node.children[j])]

    n_nodes = 0
    for node in tree.nodes():
        n_nodes += 1
        assert node.size <= tree.branching
        for j in range(node.size):
            child = node.children[j]
            idx = child if node.leaf else points_under(child)
            pts = x[idx]
            assert node.n[j] == len(idx)
            np.testing.assert_allclose(node.ls[j], pts.sum(0), atol=1e-9)
            assert node.ss[j] == pytest.approx((pts * pts).sum(), rel=1e-12)
    assert n_nodes > 3  # splits happened
    assert sorted(i for e in tree.leaf_entries() for i in e[3]) == list(range(300))


def test_cf_additivity():
    rng = np.random.default_rng(7)
    a, b = rng.normal(size=(5, 2)), rng.normal(size=(8, 2))

    def cf(p):
        return len(p), p.sum(0), (p * p).sum()

    merged = cf(np.vstack([a, b]))
    na, la, sa = cf(a)
    nb, lb, sb = cf(b)
    assert merged[0] == na + nb
    np.testing.assert_allclose(merged[1], la + lb)
    assert merged[2] == pytest.approx(sa + sb)


def test_leaf_entries_respect_threshold():
    from cortexvq.baselines.birch import cf_radius
    x = np.random.default_rng(8).normal(size=(500, 2))
    for n, ls, ss, _ in build_cf_tree(x, 0.3, 10).leaf_entries():
        assert cf_radius(n, ls, ss) <= 0.3 + 1e-12


def test_default_threshold_is_quarter_rms_distance():
    x = np.array([[0.0], [2.0]])
    # pairwise squared distances 4 (twice) over m(m-1)=2 ordered pairs -> rms 2
    assert default_threshold(x) == pytest.approx(0.5)


# gmm

def test_gmm_single_component_is_mle():
    x = np.random.default_rng(9).normal(3.0, 2.0, size=(2000, 2))
    cb = gmm_em(x, 1)
    np.testing.assert_allclose(cb.centroids[0], x.mean(0), atol=1e-9)
    np.testing.assert_allclose(cb.variances[0], x.var(0), rtol=1e-9)
    assert cb.weights.tolist() == [1.0]


def test_gmm_separated_components():
    rng = np.random.default_rng(10)
    x = np.concatenate([rng.normal(-10, 1, 10_000), rng.normal(10, 1, 10_000)])
    cb = gmm_em(x, 2, seed=1)
    np.testing.assert_allclose(sorted_centroids(cb), [-10, 10], atol=0.1)
    np.testing.assert_allclose(cb.weights, [0.5, 0.5], atol=0.01)


def test_gmm_log_likelihood_monotone():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 5))
        n = int(rng.integers(20, 400))
        comp = rng.integers(0, k, n)
        x = rng.normal(rng.normal(0, 5, k)[comp], rng.uniform(0.3, 3, k)[comp])
        cb = gmm_em(x, k, tol=1e-12, max_iter=200, seed=seed)
        d = np.diff(cb.log_likelihood_history)
        allowed = np.ones(d.size, dtype=bool)
        for r in cb.meta["reseeded_at"]:
            allowed[r - 1] = False
        assert np.all(d[allowed] >= -1e-9)


def test_gmm_encodes_by_probability_not_distance():
    cb = GaussianMixtureCodebook(np.array([[0.0], [3.0]]), {}, weights=np.array([0.5, 0.5]),
                                 variances=np.array([[100.0], [0.01]]))
    # 2.5 is nearer the second mean but far outside its narrow spread
    assert cb.encode([2.5]) == 0
    assert cb.encode([3.0]) == 1


def test_gmm_constant_dimension_stays_finite():
    x = np.column_stack([np.random.default_rng(11).normal(size=200), np.full(200, 4.0)])
    cb = gmm_em(x, 3)
    assert np.all(np.isfinite(cb.centroids)) and np.all(cb.variances > 0)
    assert np.all(np.isfinite(cb.log_likelihood_history))


def test_gmm_rejects_bad_tol():
    with pytest.raises(ConfigurationError):
        gmm_em(TOY, 2, tol=0.0)


# shared codebook contract

def test_all_quantizers_are_interchangeable():
    rng = np.random.default_rng(12)
    x = rng.normal(size=(300, 4))
    books = [kmeans(x, 8).codebook, pnn(x, 8), birch(x, threshold=0.2, k=8), gmm_em(x, 8)]
    for cb in books:
        assert isinstance(cb, CentroidCodebook) and cb.K == 8 and cb.dim == 4
        idx = cb.encode_batch(x)
        rec = cb.decode_batch(idx)
        assert rmse_distortion(x, rec).rmse < x.std()
        with pytest.raises(CodebookLookupError):
            cb.decode(8)
