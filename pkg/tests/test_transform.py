import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cortexvq.errors import DegenerateInputError, ShapeError
from cortexvq.transform import (
    NormalizationSpec,
    NormMode,
    denormalize,
    dwpt_forward,
    dwpt_inverse,
    estimate_r_init,
    normalize,
    packet_frequency_rank,
)

R2 = math.sqrt(2.0)


def _packet_by_levels(x):
    # independent recursion: apply low/high filters to each band, concatenate children in place
    bands = [np.asarray(x, dtype=float)]
    while len(bands[0]) > 1:
        nxt = []
        for b in bands:
            nxt.append((b[0::2] + b[1::2]) / R2)
            nxt.append((b[0::2] - b[1::2]) / R2)
        bands = nxt
    return np.concatenate(bands)


def test_constant_frame():
    c = dwpt_forward(np.ones(8))
    assert c[0] == pytest.approx(2 * R2, abs=1e-12)
    np.testing.assert_allclose(c[1:], 0.0, atol=1e-12)


def test_nyquist_frame_lands_in_highest_frequency_packet():
    x = np.array([1, -1] * 4, dtype=float)
    c = dwpt_forward(x)
    nz = np.flatnonzero(np.abs(c) > 1e-12)
    assert nz.size == 1
    assert abs(c[nz[0]]) == pytest.approx(2 * R2, abs=1e-12)
    rank = packet_frequency_rank(8)
    assert rank[nz[0]] == 7


def test_frequency_rank_is_a_permutation_matching_zero_crossings():
    n = 16
    rank = packet_frequency_rank(n)
    assert sorted(rank.tolist()) == list(range(n))
    # the atom of rank r has r sign changes (sequency)
    for i in range(n):
        atom = dwpt_inverse(np.eye(n)[i])
        signs = np.sign(atom[np.abs(atom) > 1e-12])
        assert np.count_nonzero(np.diff(signs)) == rank[i]


def test_matches_independent_recursion():
    rng = np.random.default_rng(0)
    for n in (2, 4, 8, 16, 32):
        x = rng.normal(size=n)
        np.testing.assert_allclose(dwpt_forward(x), _packet_by_levels(x), atol=1e-12)


def test_inverse_examples():
    np.testing.assert_array_equal(dwpt_inverse(np.zeros(8)), np.zeros(8))
    c = np.zeros(8)
    c[0] = 2 * R2
    np.testing.assert_allclose(dwpt_inverse(c), np.ones(8), atol=1e-12)


def test_round_trip_and_parseval_batch():
    rng = np.random.default_rng(1)
    for n in (8, 16):
        x = rng.normal(scale=100.0, size=(10_000, n))
        c = dwpt_forward(x)
        assert np.abs(dwpt_inverse(c) - x).max() < 1e-9
        np.testing.assert_allclose(np.linalg.norm(c, axis=1), np.linalg.norm(x, axis=1), rtol=1e-9)


def test_batch_equals_rows():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(5, 8))
    np.testing.assert_array_equal(dwpt_forward(x), np.array([dwpt_forward(r) for r in x]))


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 8, elements=st.floats(-1e4, 1e4)),
       arrays(np.float64, 8, elements=st.floats(-1e4, 1e4)),
       st.floats(-10, 10), st.floats(-10, 10))
def test_linearity(x, y, a, b):
    lhs = dwpt_forward(a * x + b * y)
    rhs = a * dwpt_forward(x) + b * dwpt_forward(y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(a * x).sum() + np.abs(b * y).sum()))


@pytest.mark.parametrize("n", [0, 3, 6, 12])
def test_rejects_non_power_of_two(n):
    with pytest.raises(ShapeError):
        dwpt_forward(np.zeros(n))
    with pytest.raises(ShapeError):
        dwpt_inverse(np.zeros(n))


def test_normalize_examples():
    spec = NormalizationSpec(2.0)
    np.testing.assert_array_equal(normalize([2.0, -4.0], spec), [1.0, -2.0])
    x = np.random.default_rng(3).normal(size=50) * 1234.5
    np.testing.assert_allclose(denormalize(normalize(x, spec), spec), x, rtol=1e-15)


def test_per_stream_max_abs():
    spec = NormalizationSpec.fit([1.0, -8.0, 3.0])
    assert spec.scale == 8.0 and spec.mode is NormMode.PER_STREAM_MAX_ABS
    assert NormalizationSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(DegenerateInputError):
        NormalizationSpec.fit(np.zeros(10))


def test_fixed_scale_and_invalid_scale():
    assert NormalizationSpec.fit([1, 2], NormMode.FIXED_SCALE, scale=5.0).scale == 5.0
    for bad in (0.0, -1.0, float("inf")):
        with pytest.raises(DegenerateInputError):
            NormalizationSpec(bad)


def test_estimate_r_init_half_range():
    c = np.array([[0.0, 1.0], [4.0, 1.0], [2.0, 1.0]])
    r = estimate_r_init(c)
    assert r[0] == 2.0
    assert r[1] > 0  # degenerate level still gets a positive range
