"""Hierarchical cortex-tree vector quantization with wavelet packet features.

Typical use::

    from cortexvq import signals, transform, CortexTree, CortexParams
    stream = signals.gen_basic_waves(signals.BasicWavesConfig(count=200, seed=1))
    coeffs = transform.dwpt_forward(signals.frame_matrix(stream.samples) / 2e4)
    tree = CortexTree(8, CortexParams(r_init=1.0, r_limit=0.05, maturity_threshold=50))
    tree.train(coeffs)
    codebook = tree.finalize()
"""
from .cortex import Codebook, CortexParams, CortexTree, TrainTrace
from .errors import (CodebookLookupError, ConfigurationError, CortexVQError,
                     DegenerateInputError, DomainError, FormatError, InfeasibleKError, ShapeError,
                     UndertrainedTreeError)

__version__ = "0.1.0"

__all__ = ["Codebook", "CortexParams", "CortexTree", "TrainTrace", "CodebookLookupError",
           "ConfigurationError", "CortexVQError", "DegenerateInputError", "DomainError",
           "FormatError", "InfeasibleKError", "ShapeError", "UndertrainedTreeError"]
