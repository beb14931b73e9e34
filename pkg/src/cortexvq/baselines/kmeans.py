"""Lloyd's K-means, run until assignments stop changing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .common import CentroidCodebook, as_vectors, check_k, nearest_centroid


@dataclass
class KMeansResult:
    codebook: CentroidCodebook
    assignments: np.ndarray
    sse_history: list
    n_iter: int
    converged: bool

    @property
    def sse(self):
        return self.sse_history[-1]


def _sse(x, centroids, labels):
    diff = x - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _update_centroids(x, labels, k):
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    nonempty = counts > 0
    sums[nonempty] /= counts[nonempty, None]
    return sums, counts


def _assign_sorted_1d(xs, centroids):
    """Cluster labels for sorted 1-D data as contiguous runs.

    Returns ``(order, bounds)``: ``order`` lists distinct centroid indices by
    value and run ``r`` is ``xs[bounds[r]:bounds[r + 1]]``.  Among equal
    centroids the lowest index wins; a point exactly midway goes to the lower
    index of the two neighbours, as in the general argmin path.
    """
    c = centroids[:, 0]
    idx = np.lexsort((np.arange(c.size), c))
    keep = np.ones(idx.size, dtype=bool)
    keep[1:] = c[idx[1:]] != c[idx[:-1]]
    order = idx[keep]
    cv = c[order]
    mids = 0.5 * (cv[1:] + cv[:-1])
    side_right = order[:-1] < order[1:]
    bounds = np.empty(order.size + 1, dtype=np.int64)
    bounds[0], bounds[-1] = 0, xs.size
    left = np.searchsorted(xs, mids, side="left")
    right = np.searchsorted(xs, mids, side="right")
    bounds[1:-1] = np.where(side_right, right, left)
    return order, bounds


def _lloyd_1d(x, centroids, max_iter):
    """Lloyd on scalar data: sort once, then every step costs O(K log n)."""
    k = centroids.shape[0]
    perm = np.argsort(x[:, 0], kind="stable")
    xs = x[perm, 0]
    csum = np.concatenate(([0.0], np.cumsum(xs)))
    csq = np.concatenate(([0.0], np.cumsum(xs * xs)))
    centroids = centroids.copy()

    def runs_sse(order, bounds):
        lo, hi = bounds[:-1], bounds[1:]
        c = centroids[order, 0]
        n = hi - lo
        s1 = csum[hi] - csum[lo]
        s2 = csq[hi] - csq[lo]
        return float(np.maximum(s2 - 2.0 * c * s1 + n * c * c, 0.0).sum())

    order, bounds = _assign_sorted_1d(xs, centroids)
    history = [runs_sse(order, bounds)]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        lo, hi = bounds[:-1], bounds[1:]
        n = hi - lo
        new = np.zeros(k)
        counts = np.zeros(k, dtype=np.int64)
        counts[order] = n
        nz = n > 0
        new[order[nz]] = (csum[hi] - csum[lo])[nz] / n[nz]
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # residuals in the caller's point order so ties pick the same point
            labels = np.empty(xs.size, dtype=np.int64)
            labels[perm] = np.repeat(order, n)
            resid = (x[:, 0] - new[labels]) ** 2
            for c in empty:
                far = int(resid.argmax())
                new[c] = x[far, 0]
                resid[far] = -1.0
        centroids[:, 0] = new
        new_order, new_bounds = _assign_sorted_1d(xs, centroids)
        history.append(runs_sse(new_order, new_bounds))
        same = np.array_equal(np.repeat(new_order, np.diff(new_bounds)),
                              np.repeat(order, np.diff(bounds)))
        order, bounds = new_order, new_bounds
        if same:
            converged = True
            break
    labels = np.empty(xs.size, dtype=np.int64)
    labels[perm] = np.repeat(order, np.diff(bounds))
    return centroids, labels, history, it, converged


def lloyd(x, centroids, max_iter=10_000):
    """Lloyd iterations from the given centroids.

    Empty clusters are moved onto the point farthest from its own centroid.
    Scalar data takes a sorted fast path with the same fixed points.
    """
    if x.shape[1] == 1:
        return _lloyd_1d(x, np.asarray(centroids, dtype=np.float64), max_iter)
    k = centroids.shape[0]
    centroids = centroids.copy()
    labels = nearest_centroid(x, centroids)
    history = [_sse(x, centroids, labels)]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        centroids, counts = _update_centroids(x, labels, k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # distances are to the centroids the points were assigned to
            resid = ((x - centroids[labels]) ** 2).sum(1)
            for c in empty:
                far = int(resid.argmax())
                centroids[c] = x[far]
                resid[far] = -1.0
        new_labels = nearest_centroid(x, centroids)
        history.append(_sse(x, centroids, new_labels))
        if np.array_equal(new_labels, labels):
            converged = True
            labels = new_labels
            break
        labels = new_labels
    return centroids, labels, history, it, converged


def kmeans(data, k, seed=0, n_init=1, max_iter=10_000) -> KMeansResult:
    """K-means with ``n_init`` random-sample restarts; keeps the lowest SSE."""
    x = as_vectors(data)
    check_k(k, x.shape[0])
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        init = x[rng.choice(x.shape[0], size=k, replace=False)]
        centroids, labels, history, it, conv = lloyd(x, init, max_iter)
        if best is None or history[-1] < best.sse:
            best = KMeansResult(CentroidCodebook(centroids, {"algorithm": "kmeans", "seed": seed,
                                                             "n_init": n_init}),
                                labels, history, it, conv)
    return best
