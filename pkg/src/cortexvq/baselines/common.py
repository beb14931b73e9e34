from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CodebookLookupError, ConfigurationError, ShapeError


def as_vectors(data) -> np.ndarray:
    """Validate a vector set and return it as a float64 (n, dim) array."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ShapeError("vector set must be a non-empty (n, dim) array")
    return x


def check_k(k, n):
    if not 1 <= k <= n:
        raise ConfigurationError(f"k must lie in [1, {n}], got {k}")


def sq_distances(x, centroids):
    """Squared Euclidean distances, shape (n, K), clipped at zero."""
    d = (x * x).sum(1)[:, None] - 2.0 * x @ centroids.T + (centroids * centroids).sum(1)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def nearest_centroid(x, centroids, chunk=8192):
    out = np.empty(x.shape[0], dtype=np.int64)
    for s in range(0, x.shape[0], chunk):
        out[s:s + chunk] = sq_distances(x[s:s + chunk], centroids).argmin(1)
    return out


@dataclass
class CentroidCodebook:
    """K centroids; vectors are encoded to their nearest centroid."""

    centroids: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.centroids, dtype=np.float64)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1:
            raise ShapeError("need at least one centroid")
        self.centroids = c

    @property
    def K(self):
        return self.centroids.shape[0]

    @property
    def dim(self):
        return self.centroids.shape[1]

    def __len__(self):
        return self.K

    def encode_batch(self, data) -> np.ndarray:
        x = as_vectors(data)
        if x.shape[1] != self.dim:
            raise ShapeError(f"expected dim {self.dim}, got {x.shape[1]}")
        return nearest_centroid(x, self.centroids)

    def encode(self, vector) -> int:
        return int(self.encode_batch(np.asarray(vector, dtype=np.float64)[None, :])[0])

    def decode_batch(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.K):
            raise CodebookLookupError(f"indices outside [0, {self.K})")
        return self.centroids[idx]

    def decode(self, index) -> np.ndarray:
        return self.decode_batch([index])[0].copy()
