"""Distortion, entropy, gain, generalization and timing helpers."""
from __future__ import annotations

import enum
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, ShapeError


class Phase(str, enum.Enum):
    TRAIN = "Train"
    TEST = "Test"


@dataclass(frozen=True)
class DistortionReport:
    rmse: float
    n_samples: int
    phase: Phase = Phase.TRAIN


@dataclass(frozen=True)
class EntropyReport:
    probabilities: np.ndarray
    H: float
    base: float


@dataclass(frozen=True)
class GainRecord:
    t_alg: float
    d_alg: float
    t_cortex: float
    d_cortex: float
    gain: float


def rmse_distortion(original, reconstructed, phase=Phase.TRAIN) -> DistortionReport:
    o = np.asarray(original, dtype=np.float64).ravel()
    r = np.asarray(reconstructed, dtype=np.float64).ravel()
    if o.shape != r.shape:
        raise ShapeError(f"length mismatch: {o.size} vs {r.size}")
    if o.size == 0:
        raise ShapeError("cannot measure distortion of empty sequences")
    diff = o - r
    return DistortionReport(float(np.sqrt(np.dot(diff, diff) / o.size)), int(o.size), Phase(phase))


def shannon_entropy(counts, base=None) -> EntropyReport:
    """Entropy of the visit distribution; ``base=None`` uses the outcome count."""
    c = np.asarray(counts, dtype=np.float64).ravel()
    if c.size == 0 or (c < 0).any() or not c.sum() > 0:
        raise DegenerateInputError("counts must be non-negative with a positive sum")
    if base is None:
        base = float(c.size)
    p = c / c.sum()
    if c.size == 1:
        # a single outcome carries no information whatever the base
        return EntropyReport(p, 0.0, float(base) if base > 1 else 2.0)
    if not base > 1:
        raise DomainError("entropy base must exceed 1")
    nz = p[p > 0]
    h = float(-(nz * np.log(nz)).sum() / math.log(base))
    return EntropyReport(p, max(h, 0.0), float(base))


def gain(t_alg, d_alg, t_cortex, d_cortex) -> GainRecord:
    """Combined time-and-distortion advantage of the cortex codebook over another quantizer."""
    for name, v in (("t_alg", t_alg), ("d_alg", d_alg), ("t_cortex", t_cortex), ("d_cortex", d_cortex)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    g = (t_alg * d_alg) / (t_cortex * d_cortex)
    return GainRecord(float(t_alg), float(d_alg), float(t_cortex), float(d_cortex), float(g))


def generalization_ratio(train: DistortionReport, test: DistortionReport) -> float:
    if not train.rmse > 0:
        raise DomainError("train rmse must be positive")
    return test.rmse / train.rmse


def generalization_anomaly(ratio, floor=0.9):
    """Test error well below train error usually means a leaky split."""
    return ratio < floor


def timed(fn, *args, **kwargs):
    """Run ``fn`` once; return (result, wall seconds) on the monotonic clock."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@dataclass(frozen=True)
class TimingStats:
    mean: float
    variance: float
    median: float
    samples: tuple


def time_repeated(fn, repeats=3, warmup=True) -> TimingStats:
    if warmup:
        fn()
    samples = tuple(timed(fn)[1] for _ in range(repeats))
    var = statistics.variance(samples) if len(samples) > 1 else 0.0
    return TimingStats(statistics.fmean(samples), var, statistics.median(samples), samples)
