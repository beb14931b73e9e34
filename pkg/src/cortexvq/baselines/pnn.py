"""Pairwise nearest neighbour (agglomerative) codebook reduction.

Clusters are merged greedily by the Ward merge cost
``n_a * n_b / (n_a + n_b) * |c_a - c_b|^2``, which is exactly the increase in
squared error caused by the merge.  A nearest-neighbour table keeps each step
at O(n) distance evaluations.
"""
from __future__ import annotations

import numpy as np

from .common import CentroidCodebook, as_vectors, check_k


def _merge_costs(centroids, counts, i, candidates):
    d = ((centroids[candidates] - centroids[i]) ** 2).sum(1)
    n = counts[candidates]
    return counts[i] * n / (counts[i] + n) * d


class _PNNState:
    def __init__(self, centroids, counts):
        self.c = centroids
        self.n = counts
        m = centroids.shape[0]
        self.active = np.ones(m, dtype=bool)
        self.nn = np.full(m, -1, dtype=np.int64)
        self.cost = np.full(m, np.inf)
        for i in range(m):
            self.refresh(i)

    def refresh(self, i):
        cand = np.flatnonzero(self.active)
        cand = cand[cand != i]
        if cand.size == 0:
            self.nn[i], self.cost[i] = -1, np.inf
            return
        costs = _merge_costs(self.c, self.n, i, cand)
        j = int(costs.argmin())  # first minimum: lowest partner index
        self.nn[i], self.cost[i] = cand[j], costs[j]

    def merge_once(self):
        a = int(self.cost.argmin())   # lowest index among equal-cost pairs
        b = int(self.nn[a])
        a, b = min(a, b), max(a, b)
        na, nb = self.n[a], self.n[b]
        self.c[a] = (na * self.c[a] + nb * self.c[b]) / (na + nb)
        self.n[a] = na + nb
        self.active[b] = False
        self.cost[b] = np.inf
        self.nn[b] = -1

        self.refresh(a)
        others = np.flatnonzero(self.active)
        others = others[others != a]
        if others.size == 0:
            return a, b
        stale = others[(self.nn[others] == a) | (self.nn[others] == b)]
        for i in stale:
            self.refresh(int(i))
        # the merged cluster may now be the nearest neighbour of someone else
        fresh = others[(self.nn[others] != a)]
        if fresh.size:
            ca = _merge_costs(self.c, self.n, a, fresh)
            better = (ca < self.cost[fresh]) | ((ca == self.cost[fresh]) & (a < self.nn[fresh]))
            upd = fresh[better]
            self.nn[upd] = a
            self.cost[upd] = ca[better]
        return a, b


def pnn(data, k, weights=None) -> CentroidCodebook:
    """Merge clusters until ``k`` remain.  ``weights`` are per-vector counts."""
    x = as_vectors(data)
    check_k(k, x.shape[0])
    counts = np.ones(x.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64).copy()
    state = _PNNState(x.copy(), counts)
    merges = 0
    for _ in range(x.shape[0] - k):
        state.merge_once()
        merges += 1
    keep = np.flatnonzero(state.active)
    return CentroidCodebook(state.c[keep], {"algorithm": "pnn", "merges": merges,
                                            "sizes": state.n[keep].tolist()})
