import numpy as np
import pytest
from scipy import stats

from cortexvq.errors import ConfigurationError
from cortexvq.signals import (
    BasicWavesConfig,
    GaussianMixtureConfig,
    LorenzConfig,
    Source,
    draw_segments,
    frame_matrix,
    frame_stream,
    gen_basic_waves,
    gen_gaussian_mixture,
    gen_lorenz,
    lorenz_trajectory,
    wave_period,
)


def test_square_segment():
    seg = wave_period("square", 8, 1000.0, phase=0)
    assert seg.tolist() == [1000.0] * 4 + [-1000.0] * 4


def test_sinus_segment():
    A = 3.5
    seg = wave_period("sinus", 8, A)
    np.testing.assert_allclose(seg, A * np.sin(2 * np.pi * np.arange(8) / 8), atol=1e-12)


def test_sawtooth_ramps_from_minus_a_to_a():
    seg = wave_period("sawtooth", 6, 2.0)
    assert seg[0] == -2.0 and seg[-1] == 2.0
    assert np.all(np.diff(seg) > 0)


def test_phase_rotates_segment():
    base = wave_period("sinus", 10, 1.0)
    np.testing.assert_allclose(wave_period("sinus", 10, 1.0, phase=3), np.roll(base, -3))


def test_stream_is_concatenation_of_full_periods():
    cfg = BasicWavesConfig(count=50, seed=7)
    stream = gen_basic_waves(cfg)
    kind, per, amp, phase = draw_segments(cfg)
    periods = np.asarray(cfg.periods_in_samples)[per]
    assert stream.samples.size == periods.sum()
    pos = 0
    for i in range(cfg.count):
        expect = wave_period(cfg.wave_kinds[kind[i]], periods[i], cfg.amplitudes[amp[i]], phase[i])
        np.testing.assert_allclose(stream.samples[pos:pos + periods[i]], expect, atol=1e-9)
        pos += periods[i]


def test_signal_types_are_uniform():
    # 120 = 3 kinds x 4 periods x 10 amplitudes
    cfg = BasicWavesConfig(count=1_000_000, seed=1)
    assert cfg.n_signal_types == 120
    kind, per, amp, _ = draw_segments(cfg)
    types = (kind * 4 + per) * 10 + amp
    counts = np.bincount(types, minlength=120)
    assert counts.size == 120
    _, p = stats.chisquare(counts)
    assert p > 1e-3


def test_phase_within_period():
    cfg = BasicWavesConfig(count=5000, seed=3)
    _, per, _, phase = draw_segments(cfg)
    periods = np.asarray(cfg.periods_in_samples)[per]
    assert np.all((phase >= 0) & (phase < periods))
    # every offset of the longest period shows up
    assert set(phase[periods == 12]) == set(range(12))


def test_amplitude_bound_and_defaults():
    cfg = BasicWavesConfig(count=2000, seed=0)
    assert cfg.amplitudes[0] == 1000.0 and cfg.amplitudes[-1] == 20000.0
    assert len(cfg.amplitudes) == 10
    stream = gen_basic_waves(cfg)
    assert np.abs(stream.samples).max() <= max(cfg.amplitudes)
    assert stream.sample_rate_hz == 8000.0
    assert stream.source is Source.BASIC_WAVES


def test_basic_waves_deterministic():
    a = gen_basic_waves(BasicWavesConfig(count=300, seed=11)).samples
    b = gen_basic_waves(BasicWavesConfig(count=300, seed=11)).samples
    c = gen_basic_waves(BasicWavesConfig(count=300, seed=12)).samples
    assert a.tobytes() == b.tobytes()
    assert a.size != c.size or not np.array_equal(a, c)


@pytest.mark.parametrize("kwargs", [
    {"wave_kinds": ()},
    {"periods_in_samples": []},
    {"amplitudes": []},
    {"periods_in_samples": [1, 8]},
    {"amplitudes": [1.0, -2.0]},
    {"wave_kinds": ("triangle",)},
    {"count": 0},
])
def test_basic_waves_rejects_bad_config(kwargs):
    with pytest.raises(ConfigurationError):
        gen_basic_waves(BasicWavesConfig(**kwargs))


def test_lorenz_single_euler_step():
    cfg = LorenzConfig(n_steps=1, amplitude_scale=1.0)
    traj = lorenz_trajectory(cfg)
    # dx = 0, dy = 28 - 1 - 1 = 26, dz = 1 - 8/3
    np.testing.assert_allclose(traj[0], [1.0, 1.26, 1.0 + 0.01 * (1 - 8 / 3)], atol=1e-15)
    assert traj[0, 2] == pytest.approx(0.98333333333, abs=1e-10)
    assert gen_lorenz(cfg).samples.tolist() == [1.0]


def test_lorenz_rejects_zero_step():
    with pytest.raises(ConfigurationError):
        gen_lorenz(LorenzConfig(step=0.0))
    with pytest.raises(ConfigurationError):
        gen_lorenz(LorenzConfig(n_steps=0))


def test_lorenz_deterministic_and_scaled():
    a = gen_lorenz(LorenzConfig(n_steps=2000))
    b = gen_lorenz(LorenzConfig(n_steps=2000))
    assert a.samples.tobytes() == b.samples.tobytes()
    x = lorenz_trajectory(LorenzConfig(n_steps=2000))[:, 0]
    np.testing.assert_array_equal(a.samples, x * 1e3)
    assert a.sample_rate_hz == pytest.approx(100.0)


def test_lorenz_bounded():
    traj = lorenz_trajectory(LorenzConfig(n_steps=200_000))
    assert np.abs(traj[:, 0]).max() <= 30.0


def test_rk4_matches_reference_integrator():
    from scipy.integrate import solve_ivp

    def rate(_, v):
        x, y, z = v
        return [10.0 * (y - x), x * (28.0 - z) - y, x * y - 8.0 / 3.0 * z]

    traj = lorenz_trajectory(LorenzConfig(n_steps=100, step=0.001, integrator="rk4"))
    ref = solve_ivp(rate, (0, 0.1), [1.0, 1.0, 1.0], t_eval=np.arange(1, 101) * 0.001,
                    rtol=1e-12, atol=1e-12, method="DOP853")
    np.testing.assert_allclose(traj, ref.y.T, rtol=1e-8, atol=1e-9)


def test_gaussian_mixture_defaults():
    s = gen_gaussian_mixture(GaussianMixtureConfig())
    assert s.samples.size == 300_000
    second = s.samples[100_000:200_000]
    assert abs(second.mean() + 10.0) <= 3 * 3.0 / np.sqrt(1e5)
    assert s.source is Source.GAUSSIAN_MIXTURE


def test_gaussian_single_component_std():
    s = gen_gaussian_mixture(GaussianMixtureConfig(components=[(0.0, 1.0, 50_000)], seed=4))
    assert s.samples.std() == pytest.approx(1.0, abs=0.02)


def test_gaussian_rejects_nonpositive_std():
    with pytest.raises(ConfigurationError):
        gen_gaussian_mixture(GaussianMixtureConfig(components=[(0.0, 0.0, 10)]))


@pytest.mark.parametrize("n,window,stride,count", [(16, 8, 1, 9), (8, 8, 1, 1), (7, 8, 1, 0),
                                                  (100, 8, 3, 31), (64, 16, 16, 4)])
def test_frame_counts(n, window, stride, count):
    from cortexvq.signals import SampleStream
    stream = SampleStream(np.arange(n, dtype=float), 8000.0, Source.BASIC_WAVES, 0)
    frames = frame_stream(stream, window, stride)
    assert len(frames) == count
    if n >= window:
        assert count == (n - window) // stride + 1
    for i, f in enumerate(frames):
        assert f.origin_offset == i * stride
        np.testing.assert_array_equal(f.values, np.arange(i * stride, i * stride + window))


@pytest.mark.parametrize("window,stride", [(6, 1), (1, 1), (8, 0), (8, 9)])
def test_frame_rejects_bad_window(window, stride):
    with pytest.raises(ConfigurationError):
        frame_matrix(np.zeros(32), window, stride)
