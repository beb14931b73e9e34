"""Normalization and the full-depth Haar wavelet packet transform.

Coefficients are laid out in natural (Paley) packet order: at every level each
band is split into its approximation then its detail half, so index 0 is always
the full-depth approximation.  The filters are orthonormal, which keeps squared
error identical in sample and coefficient space.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ShapeError

SQRT_HALF = 1.0 / math.sqrt(2.0)


class NormMode(str, enum.Enum):
    FIXED_SCALE = "FixedScale"
    PER_STREAM_MAX_ABS = "PerStreamMaxAbs"


@dataclass(frozen=True)
class NormalizationSpec:
    scale: float
    mode: NormMode = NormMode.FIXED_SCALE

    def __post_init__(self):
        object.__setattr__(self, "mode", NormMode(self.mode))
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DegenerateInputError(f"normalization scale must be positive, got {self.scale}")

    @classmethod
    def fit(cls, samples, mode=NormMode.PER_STREAM_MAX_ABS, scale=None):
        mode = NormMode(mode)
        if mode is NormMode.FIXED_SCALE:
            return cls(float(scale), mode)
        peak = float(np.max(np.abs(np.asarray(samples, dtype=np.float64))))
        if peak == 0.0:
            raise DegenerateInputError("cannot max-abs normalize an all-zero stream")
        return cls(peak, mode)

    def to_dict(self):
        return {"scale": self.scale, "mode": self.mode.value}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["scale"]), NormMode(d["mode"]))


def normalize(frame, spec: NormalizationSpec):
    return np.asarray(frame, dtype=np.float64) / spec.scale


def denormalize(frame, spec: NormalizationSpec):
    return np.asarray(frame, dtype=np.float64) * spec.scale


def _check_length(n):
    if n < 1 or n & (n - 1):
        raise ShapeError(f"length must be a power of two, got {n}")
    return n.bit_length() - 1


def dwpt_forward(frames) -> np.ndarray:
    """Full-depth Haar packet transform of a frame or a batch of frames (rows)."""
    x = np.asarray(frames, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    m, n = x.shape
    depth = _check_length(n)
    bands = x.reshape(m, 1, n)
    for _ in range(depth):
        even, odd = bands[..., 0::2], bands[..., 1::2]
        low = (even + odd) * SQRT_HALF
        high = (even - odd) * SQRT_HALF
        # (m, nb, L) -> (m, nb, 2, L/2) -> (m, 2nb, L/2): children stay next to their parent
        bands = np.stack((low, high), axis=2).reshape(m, -1, low.shape[-1])
    out = bands.reshape(m, n)
    return out[0] if single else out


def dwpt_inverse(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    single = c.ndim == 1
    c = np.atleast_2d(c)
    m, n = c.shape
    depth = _check_length(n)
    bands = c.reshape(m, n, 1)
    for _ in range(depth):
        nb, length = bands.shape[1], bands.shape[2]
        pairs = bands.reshape(m, nb // 2, 2, length)
        low, high = pairs[:, :, 0, :], pairs[:, :, 1, :]
        merged = np.empty((m, nb // 2, 2 * length))
        merged[..., 0::2] = (low + high) * SQRT_HALF
        merged[..., 1::2] = (low - high) * SQRT_HALF
        bands = merged
    out = bands.reshape(m, n)
    return out[0] if single else out


def packet_frequency_rank(n) -> np.ndarray:
    """Frequency rank (0 = lowest) of each natural-order packet index.

    Natural order visits packets in Gray-code order of frequency, so the rank
    is the inverse Gray code of the index.
    """
    _check_length(n)
    idx = np.arange(n)
    rank = idx.copy()
    shift = idx >> 1
    while shift.any():
        rank ^= shift
        shift >>= 1
    return rank


def estimate_r_init(coeffs, n_frames=1000):
    """Half the dynamic range of each coefficient level over the first frames."""
    c = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))[:n_frames]
    half = 0.5 * (c.max(axis=0) - c.min(axis=0))
    # a level with no spread still needs a usable positive range
    floor = max(float(half.max()), 1.0) * 1e-3
    return tuple(float(v) if v > floor else floor for v in half)
