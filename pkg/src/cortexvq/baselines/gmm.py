"""Diagonal-covariance Gaussian mixture fitted by EM, initialised from K-means."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .common import CentroidCodebook, as_vectors, check_k
from .kmeans import kmeans

LOG_2PI = np.log(2.0 * np.pi)


def _log_component_densities(x, means, variances, log_weights):
    """log(w_k) + log N(x | mu_k, diag(var_k)), shape (n, K)."""
    prec = 1.0 / variances
    quad = (x * x) @ prec.T - 2.0 * x @ (means * prec).T + (means * means * prec).sum(1)[None, :]
    log_det = np.log(variances).sum(1)
    return log_weights[None, :] - 0.5 * (x.shape[1] * LOG_2PI + log_det[None, :] + quad)


def _logsumexp_rows(a):
    m = a.max(1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(1, keepdims=True)))[:, 0]


@dataclass
class GaussianMixtureCodebook(CentroidCodebook):
    """Codebook whose encoder picks the most probable component, not the nearest mean."""

    weights: np.ndarray = None
    variances: np.ndarray = None
    log_likelihood_history: list = field(default_factory=list)

    def encode_batch(self, data, chunk=8192):
        x = as_vectors(data)
        logw = np.log(self.weights)
        out = np.empty(x.shape[0], dtype=np.int64)
        for s in range(0, x.shape[0], chunk):
            out[s:s + chunk] = _log_component_densities(
                x[s:s + chunk], self.centroids, self.variances, logw).argmax(1)
        return out


def gmm_em(data, k, tol=0.01, max_iter=100, seed=0, var_floor_ratio=1e-6,
           reinit_patience=3) -> GaussianMixtureCodebook:
    """Fit a K-component diagonal GMM.

    Stops when the mean log-likelihood per point improves by less than ``tol``
    or after ``max_iter`` EM iterations.  Variances are floored at
    ``var_floor_ratio`` times the per-dimension data variance; a component
    pinned at the floor for ``reinit_patience`` consecutive iterations (or one
    that loses all responsibility) is re-seeded at a random data point.
    ``meta["reseeded_at"]`` lists the history positions that follow a re-seed;
    the likelihood is only guaranteed not to fall between re-seeds.
    """
    x = as_vectors(data)
    n, dim = x.shape
    check_k(k, n)
    if not tol > 0:
        raise ConfigurationError("tol must be positive")
    rng = np.random.default_rng(seed)

    data_var = x.var(0)
    # an absolute floor keeps constant dimensions from collapsing to zero variance
    ref = float(data_var.max()) if data_var.max() > 0 else max(float((x * x).mean()), 1.0)
    floor = np.maximum(var_floor_ratio * data_var, 1e-12 * ref)
    fallback_var = np.maximum(data_var, floor)

    km = kmeans(x, k, seed=seed)
    labels = km.assignments
    means = km.codebook.centroids.copy()
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    variances = np.empty((k, dim))
    for j in range(k):
        members = x[labels == j]
        variances[j] = members.var(0) if members.shape[0] > 1 else fallback_var
    variances = np.maximum(variances, floor)
    weights = np.maximum(counts, 1.0) / np.maximum(counts, 1.0).sum()

    history = []
    pinned = np.zeros(k, dtype=np.int64)
    reinits = 0
    reseeded_at = []
    prev = -np.inf
    for _ in range(max_iter):
        # E step
        logp = _log_component_densities(x, means, variances, np.log(weights))
        log_norm = _logsumexp_rows(logp)
        ll = float(log_norm.mean())
        history.append(ll)
        if ll - prev < tol:
            break
        prev = ll
        resp = np.exp(logp - log_norm[:, None])

        # M step
        nk = resp.sum(0)
        dead = nk < 1e-10 * n
        nk_safe = np.where(dead, 1.0, nk)
        weights = nk_safe / nk_safe.sum()
        means = (resp.T @ x) / nk_safe[:, None]
        second = (resp.T @ (x * x)) / nk_safe[:, None]
        raw_var = second - means * means
        at_floor = (raw_var <= floor).any(1)
        variances = np.maximum(raw_var, floor)

        pinned = np.where(at_floor, pinned + 1, 0)
        bad = dead | (pinned >= reinit_patience)
        if bad.any():
            for j in np.flatnonzero(bad):
                means[j] = x[rng.integers(n)]
                variances[j] = fallback_var
                pinned[j] = 0
                reinits += 1
            weights = np.where(bad, 1.0 / n, weights)
            weights /= weights.sum()
            reseeded_at.append(len(history))
            prev = -np.inf   # the likelihood may legitimately drop after a re-seed

    return GaussianMixtureCodebook(
        means,
        {"algorithm": "gmm", "tol": tol, "seed": seed, "iterations": len(history),
         "reinitialisations": reinits, "reseeded_at": reseeded_at},
        weights=weights, variances=variances, log_likelihood_history=history)
