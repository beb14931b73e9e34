"""Synthetic signal generators and stream framing.

Three sources are supported: concatenated basic waves (sinus, square,
sawtooth), the x series of the Lorenz system, and a concatenation of
Gaussian draws.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

WAVE_KINDS = ("sinus", "square", "sawtooth")


class Source(str, enum.Enum):
    BASIC_WAVES = "BasicWaves"
    LORENZ = "Lorenz"
    GAUSSIAN_MIXTURE = "GaussianMixture"


@dataclass
class SampleStream:
    samples: np.ndarray
    sample_rate_hz: float
    source: Source
    seed: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.source = Source(self.source)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ConfigurationError("stream must be a non-empty 1-D sequence")
        if not self.sample_rate_hz > 0:
            raise ConfigurationError("sample_rate_hz must be positive")

    def __len__(self):
        return self.samples.size


def _default_amplitudes():
    return [float(a) for a in np.linspace(1000.0, 20000.0, 10)]


@dataclass
class BasicWavesConfig:
    count: int = 1000
    seed: int = 0
    wave_kinds: Sequence[str] = WAVE_KINDS
    periods_in_samples: Sequence[int] = (6, 8, 10, 12)
    amplitudes: Sequence[float] = field(default_factory=_default_amplitudes)
    sample_rate_hz: float = 8000.0

    def validate(self):
        if not self.wave_kinds or not self.periods_in_samples or not self.amplitudes:
            raise ConfigurationError("wave kinds, periods and amplitudes must be non-empty")
        unknown = set(self.wave_kinds) - set(WAVE_KINDS)
        if unknown:
            raise ConfigurationError(f"unknown wave kinds: {sorted(unknown)}")
        if any(int(p) < 2 for p in self.periods_in_samples):
            raise ConfigurationError("every period must be at least 2 samples")
        if any(not a > 0 for a in self.amplitudes):
            raise ConfigurationError("amplitudes must be strictly positive")
        if self.count < 1:
            raise ConfigurationError("count must be >= 1")
        if not self.sample_rate_hz > 0:
            raise ConfigurationError("sample_rate_hz must be positive")

    @property
    def n_signal_types(self):
        return len(self.wave_kinds) * len(self.periods_in_samples) * len(self.amplitudes)


@dataclass
class LorenzConfig:
    n_steps: int = 10000
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    step: float = 0.01
    initial_xyz: tuple = (1.0, 1.0, 1.0)
    amplitude_scale: float = 1e3
    integrator: str = "euler"

    def validate(self):
        if not self.step > 0:
            raise ConfigurationError("step must be positive")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be >= 1")
        if self.integrator not in ("euler", "rk4"):
            raise ConfigurationError(f"unknown integrator {self.integrator!r}")
        if len(self.initial_xyz) != 3:
            raise ConfigurationError("initial_xyz must have three components")


@dataclass
class GaussianMixtureConfig:
    components: Sequence[tuple] = ((0.0, 5.0, 100_000), (-10.0, 3.0, 100_000), (10.0, 2.0, 100_000))
    seed: int = 0
    sample_rate_hz: float = 1.0

    def validate(self):
        if not self.components:
            raise ConfigurationError("at least one component is required")
        for mean, std, n in self.components:
            if not std > 0:
                raise ConfigurationError(f"component std must be positive, got {std}")
            if int(n) < 1:
                raise ConfigurationError("component n_samples must be >= 1")


@dataclass
class Frame:
    values: np.ndarray
    origin_offset: int


def wave_period(kind, period, amplitude, phase=0):
    """One full period of a basic wave, starting ``phase`` samples in."""
    t = (np.arange(period) + phase) % period
    return _wave_values(kind, t, period, amplitude)


def _wave_values(kind, t, period, amplitude):
    t = np.asarray(t, dtype=np.float64)
    if kind == "sinus":
        return amplitude * np.sin(2.0 * np.pi * t / period)
    if kind == "square":
        return np.where(t < period / 2.0, amplitude, -amplitude).astype(np.float64)
    if kind == "sawtooth":
        return amplitude * (-1.0 + 2.0 * t / (period - 1))
    raise ConfigurationError(f"unknown wave kind {kind!r}")


def draw_segments(cfg: BasicWavesConfig):
    """Random (kind, period, amplitude, phase) index draws, one per segment."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    kind_idx = rng.integers(0, len(cfg.wave_kinds), size=cfg.count)
    period_idx = rng.integers(0, len(cfg.periods_in_samples), size=cfg.count)
    amp_idx = rng.integers(0, len(cfg.amplitudes), size=cfg.count)
    periods = np.asarray(cfg.periods_in_samples, dtype=np.int64)[period_idx]
    # phase is uniform over the integer offsets of its own period
    phase = np.floor(rng.random(cfg.count) * periods).astype(np.int64)
    return kind_idx, period_idx, amp_idx, phase


def gen_basic_waves(cfg: BasicWavesConfig) -> SampleStream:
    kind_idx, period_idx, amp_idx, phase = draw_segments(cfg)
    periods = np.asarray(cfg.periods_in_samples, dtype=np.int64)[period_idx]
    amps = np.asarray(cfg.amplitudes, dtype=np.float64)[amp_idx]

    total = int(periods.sum())
    starts = np.concatenate(([0], np.cumsum(periods)[:-1]))
    seg = np.repeat(np.arange(cfg.count), periods)
    t = (np.arange(total) - starts[seg] + phase[seg]) % periods[seg]

    out = np.empty(total)
    for k, kind in enumerate(cfg.wave_kinds):
        mask = kind_idx[seg] == k
        out[mask] = _wave_values(kind, t[mask], periods[seg][mask], amps[seg][mask])
    return SampleStream(out, cfg.sample_rate_hz, Source.BASIC_WAVES, cfg.seed)


def _lorenz_rate(state, sigma, rho, beta):
    x, y, z = state
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def lorenz_trajectory(cfg: LorenzConfig) -> np.ndarray:
    """States after each of the ``n_steps`` integration steps, shape (n_steps, 3)."""
    cfg.validate()
    s, r, b, h = cfg.sigma, cfg.rho, cfg.beta, cfg.step
    out = np.empty((cfg.n_steps, 3))
    x, y, z = (float(v) for v in cfg.initial_xyz)
    if cfg.integrator == "euler":
        for i in range(cfg.n_steps):
            dx = s * (y - x)
            dy = x * (r - z) - y
            dz = x * y - b * z
            x, y, z = x + h * dx, y + h * dy, z + h * dz
            out[i, 0] = x
            out[i, 1] = y
            out[i, 2] = z
    else:
        state = np.array([x, y, z])
        for i in range(cfg.n_steps):
            k1 = _lorenz_rate(state, s, r, b)
            k2 = _lorenz_rate(state + 0.5 * h * k1, s, r, b)
            k3 = _lorenz_rate(state + 0.5 * h * k2, s, r, b)
            k4 = _lorenz_rate(state + h * k3, s, r, b)
            state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            out[i] = state
    return out


def gen_lorenz(cfg: LorenzConfig) -> SampleStream:
    traj = lorenz_trajectory(cfg)
    return SampleStream(traj[:, 0] * cfg.amplitude_scale, 1.0 / cfg.step, Source.LORENZ, 0)


def gen_gaussian_mixture(cfg: GaussianMixtureConfig) -> SampleStream:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    parts = [rng.normal(float(m), float(sd), size=int(n)) for m, sd, n in cfg.components]
    return SampleStream(np.concatenate(parts), cfg.sample_rate_hz, Source.GAUSSIAN_MIXTURE, cfg.seed)


def is_power_of_two(n):
    n = int(n)
    return n >= 1 and (n & (n - 1)) == 0


def _check_window(window, stride):
    if not is_power_of_two(window) or window < 2:
        raise ConfigurationError(f"window must be a power of two >= 2, got {window}")
    if not 1 <= stride <= window:
        raise ConfigurationError(f"stride must be in [1, window], got {stride}")


def frame_matrix(samples, window=8, stride=1) -> np.ndarray:
    """All full windows of ``samples`` as rows of a 2-D array (a copy)."""
    _check_window(window, stride)
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < window:
        return np.empty((0, window))
    view = np.lib.stride_tricks.sliding_window_view(samples, window)
    return np.ascontiguousarray(view[::stride])


def frame_stream(stream: SampleStream, window: int = 8, stride: int = 1) -> list[Frame]:
    mat = frame_matrix(stream.samples, window, stride)
    return [Frame(row, i * stride) for i, row in enumerate(mat)]


def basic_waves_for_frames(n_frames, window=8, stride=1, seed=0, **kwargs) -> SampleStream:
    """Basic-waves stream long enough for ``n_frames`` frames, truncated to fit exactly."""
    needed = (n_frames - 1) * stride + window
    min_period = min(kwargs.get("periods_in_samples", (6, 8, 10, 12)))
    cfg = BasicWavesConfig(count=needed // min_period + 1, seed=seed, **kwargs)
    stream = gen_basic_waves(cfg)
    return SampleStream(stream.samples[:needed], stream.sample_rate_hz, stream.source, seed)
