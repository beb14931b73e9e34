"""Comparison quantizers: K-means, PNN, BIRCH and a diagonal Gaussian mixture."""
from .birch import CFTree, birch, build_cf_tree, default_threshold
from .common import CentroidCodebook
from .gmm import GaussianMixtureCodebook, gmm_em
from .kmeans import KMeansResult, kmeans, lloyd
from .pnn import pnn

__all__ = ["CFTree", "CentroidCodebook", "GaussianMixtureCodebook", "KMeansResult", "birch",
           "build_cf_tree", "default_threshold", "gmm_em", "kmeans", "lloyd", "pnn"]
