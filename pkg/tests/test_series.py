"""Series containers, db2 wavelet transform, normalization, resampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncgait.errors import DegenerateSeries, SeriesTooShort
from syncgait.series import (ImuSeries, KeypointFrame, KeypointSeries,
                             Series1D, normalize, normalize_or_flag, resample,
                             wavelet_decompose, wavelet_denoise,
                             wavelet_reconstruct, _DB2_HI, _DB2_LO)


def test_series1d_times_and_duration():
    s = Series1D(np.zeros(5), t0=1.0, rate=10.0)
    assert np.allclose(s.times, [1.0, 1.1, 1.2, 1.3, 1.4])
    assert s.duration == pytest.approx(0.4)


def test_series1d_rejects_nonfinite():
    with pytest.raises(ValueError):
        Series1D(np.array([1.0, np.nan]))


def test_imu_series_rejects_non_monotone_time():
    t = np.array([0.0, 0.2, 0.1])
    with pytest.raises(ValueError):
        ImuSeries(t, np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)))


def test_imu_channel_extraction():
    t = np.arange(4) / 100.0
    acc = np.arange(12, dtype=float).reshape(4, 3)
    imu = ImuSeries(t, acc, np.zeros((4, 3)), np.zeros((4, 3)))
    assert np.allclose(imu.channel("ay").values, acc[:, 1])


def test_keypoint_frame_fills_required_joints():
    f = KeypointFrame(t=0.0, joints={"wrist_r": (1.0, 2.0, 0.9)})
    assert f.joints["ankle_l"] == (0.0, 0.0, 0.0)


def test_keypoint_frame_rejects_bad_confidence():
    with pytest.raises(ValueError):
        KeypointFrame(t=0.0, joints={"wrist_r": (1.0, 2.0, 1.5)})


def test_keypoint_series_rejects_non_monotone():
    frames = [KeypointFrame(t=0.1, joints={}), KeypointFrame(t=0.1, joints={})]
    with pytest.raises(ValueError):
        KeypointSeries(frames)


# --- db2 wavelet: filter identities and perfect reconstruction ---------------

def test_db2_filter_orthonormality():
    # [TRIVIAL] quadrature-mirror identities of the 4-tap filter pair
    assert np.isclose(_DB2_LO @ _DB2_LO, 1.0)
    assert np.isclose(_DB2_HI @ _DB2_HI, 1.0)
    assert np.isclose(_DB2_LO @ _DB2_HI, 0.0)
    # two vanishing moments of the high-pass branch
    assert np.isclose(_DB2_HI.sum(), 0.0)
    assert np.isclose(_DB2_HI @ np.arange(4.0), 0.0, atol=1e-12)
    assert np.isclose(_DB2_LO.sum(), np.sqrt(2.0))


@given(st.integers(min_value=0, max_value=2 ** 31 - 1),
       st.sampled_from([16, 64, 256]))
@settings(max_examples=30, deadline=None)
def test_wavelet_perfect_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    approx, details = wavelet_decompose(x, levels=3)
    back = wavelet_reconstruct(approx, details)
    assert np.allclose(back, x, atol=1e-10)


@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
@settings(max_examples=20, deadline=None)
def test_wavelet_energy_preserved(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=128)
    approx, details = wavelet_decompose(x, levels=4)
    energy = (approx ** 2).sum() + sum((d ** 2).sum() for d in details)
    assert np.isclose(energy, (x ** 2).sum(), rtol=1e-10)


def test_wavelet_denoise_reduces_noise():
    rng = np.random.default_rng(3)
    t = np.arange(512) / 100.0
    clean = np.sin(2 * np.pi * 1.0 * t)
    noisy = clean + rng.normal(0, 0.4, len(t))
    den = wavelet_denoise(Series1D(noisy, rate=100.0)).values
    assert np.mean((den - clean) ** 2) < 0.5 * np.mean((noisy - clean) ** 2)


def test_wavelet_denoise_too_short():
    with pytest.raises(SeriesTooShort):
        wavelet_denoise(Series1D(np.zeros(8), rate=100.0), levels=4)


# --- normalization / resampling ----------------------------------------------

def test_normalize_zscore_moments():
    rng = np.random.default_rng(0)
    s = normalize(Series1D(rng.normal(3.0, 2.0, 1000)))
    assert abs(s.values.mean()) < 1e-12
    assert np.isclose(s.values.std(), 1.0)


def test_normalize_minmax_range():
    s = normalize(Series1D(np.array([2.0, 4.0, 6.0])), mode="minmax")
    assert s.values.min() == 0.0 and s.values.max() == 1.0


def test_normalize_constant_raises_and_flag_variant():
    const = Series1D(np.full(10, 7.0))
    with pytest.raises(DegenerateSeries):
        normalize(const)
    flagged = normalize_or_flag(const)
    assert flagged.degenerate and np.all(flagged.values == 0.0)


def test_resample_identity_and_downsample():
    s = Series1D(np.sin(np.arange(200) / 10.0), rate=100.0)
    same = resample(s, 100.0)
    assert np.array_equal(same.values, s.values)
    half = resample(s, 50.0)
    assert half.rate == 50.0
    assert np.allclose(half.values, s.values[::2], atol=1e-12)
