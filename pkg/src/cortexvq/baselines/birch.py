"""BIRCH: clustering-feature tree (phase 1) followed by PNN on leaf entries (phase 3).

Phases 2 (tree condensing) and 4 (refinement) are optional and not run.
A clustering feature is the triple (N, LS, SS): point count, linear sum and
sum of squared norms.  Leaf entries absorb a point when the merged radius stays
within ``threshold``.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, InfeasibleKError
from .common import CentroidCodebook, as_vectors
from .pnn import pnn


class CFNode:
    """A CF-tree node; entries are stored column-wise in preallocated arrays."""

    def __init__(self, dim, capacity, leaf):
        self.leaf = leaf
        self.size = 0
        self.n = np.zeros(capacity)
        self.ls = np.zeros((capacity, dim))
        self.ss = np.zeros(capacity)
        self.children = [None] * capacity   # child CFNode, or point-index list at leaves

    def centroids(self):
        s = self.size
        return self.ls[:s] / self.n[:s, None]

    def add_entry(self, n, ls, ss, child):
        i = self.size
        self.n[i], self.ls[i], self.ss[i] = n, ls, ss
        self.children[i] = child
        self.size += 1

    def total(self):
        s = self.size
        return self.n[:s].sum(), self.ls[:s].sum(0), self.ss[:s].sum()


def cf_radius(n, ls, ss):
    """RMS distance of the summarised points to their centroid."""
    return float(np.sqrt(max(ss / n - float(ls @ ls) / (n * n), 0.0)))


class CFTree:
    def __init__(self, dim, threshold, branching=50):
        if threshold < 0:
            raise ConfigurationError("threshold must be >= 0")
        if branching < 2:
            raise ConfigurationError("branching must be >= 2")
        self.dim = dim
        self.threshold = float(threshold)
        self.branching = int(branching)
        self.root = self._new(leaf=True)

    def _new(self, leaf):
        return CFNode(self.dim, self.branching + 1, leaf)

    def insert(self, x, index):
        split = self._insert(self.root, x, float(x @ x), index)
        if split is not None:
            left, right = split
            root = self._new(leaf=False)
            for node in (left, right):
                root.add_entry(*node.total(), node)
            self.root = root

    def _closest(self, node, x):
        diff = node.centroids() - x
        return int(np.einsum("ij,ij->i", diff, diff).argmin())

    def _insert(self, node, x, xx, index):
        i = self._closest(node, x) if node.size else -1
        if node.leaf:
            if i >= 0:
                n = node.n[i] + 1.0
                ls = node.ls[i] + x
                ss = node.ss[i] + xx
                if cf_radius(n, ls, ss) <= self.threshold:
                    node.n[i], node.ls[i], node.ss[i] = n, ls, ss
                    node.children[i].append(index)
                    return None
            node.add_entry(1.0, x, xx, [index])
        else:
            child = node.children[i]
            split = self._insert(child, x, xx, index)
            if split is None:
                node.n[i] += 1.0
                node.ls[i] += x
                node.ss[i] += xx
                return None
            left, right = split
            node.n[i], node.ls[i], node.ss[i] = left.total()
            node.children[i] = left
            node.add_entry(*right.total(), right)
        if node.size > self.branching:
            return self._split(node)
        return None

    def _split(self, node):
        """Farthest pair of entries seed two nodes; the rest go to the closer seed."""
        cents = node.centroids()
        d = ((cents[:, None, :] - cents[None, :, :]) ** 2).sum(-1)
        a, b = (int(v) for v in np.unravel_index(int(d.argmax()), d.shape))
        if a == b:
            b = (a + 1) % node.size
        left, right = self._new(node.leaf), self._new(node.leaf)
        for i in range(node.size):
            target = left if d[i, a] <= d[i, b] else right
            if i == a:
                target = left
            elif i == b:
                target = right
            target.add_entry(node.n[i], node.ls[i].copy(), node.ss[i], node.children[i])
        return left, right

    def leaf_entries(self):
        """(N, LS, SS, point indices) for every leaf entry, left to right."""
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                for i in range(node.size):
                    out.append((node.n[i], node.ls[i].copy(), node.ss[i], node.children[i]))
            else:
                stack.extend(reversed(node.children[:node.size]))
        return out

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.leaf:
                stack.extend(node.children[:node.size])


def default_threshold(data, sample=1000, seed=0):
    """A quarter of the RMS pairwise distance over a random sample."""
    x = as_vectors(data)
    rng = np.random.default_rng(seed)
    if x.shape[0] > sample:
        x = x[rng.choice(x.shape[0], sample, replace=False)]
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)
    m = x.shape[0]
    mean_sq = d2.sum() / (m * (m - 1)) if m > 1 else 0.0
    return 0.25 * float(np.sqrt(mean_sq))


def build_cf_tree(data, threshold, branching=50) -> CFTree:
    x = as_vectors(data)
    tree = CFTree(x.shape[1], threshold, branching)
    for i, row in enumerate(x):
        tree.insert(row, i)
    return tree


def birch(data, threshold=None, branching=50, k=1) -> CentroidCodebook:
    x = as_vectors(data)
    if threshold is None:
        threshold = default_threshold(x)
    tree = build_cf_tree(x, threshold, branching)
    entries = tree.leaf_entries()
    if k > len(entries):
        raise InfeasibleKError(f"k={k} exceeds the {len(entries)} leaf entries at threshold {threshold}")
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    n = np.array([e[0] for e in entries])
    cents = np.array([e[1] for e in entries]) / n[:, None]
    cb = pnn(cents, k, weights=n)
    cb.meta.update({"algorithm": "birch", "threshold": threshold, "branching": branching,
                    "leaf_entries": len(entries)})
    return cb
