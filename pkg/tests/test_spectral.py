import numpy as np
import pytest
from hypothesis import given, strategies as st

from adhoc_beam.spectral import (ComplexSpectrogram, StftConfig, TimeSignal, istft,
                                 istft_multi, stft, stft_frames, stft_multi)
from adhoc_beam.sources import speech_like


def test_dc_lands_in_bin_zero():
    # untapered frame: every other bin is empty
    frame = np.abs(stft(TimeSignal(np.ones(512)), StftConfig(window="rect")).values[0])
    energy = np.sum(frame**2)
    assert np.argmax(frame) == 0
    assert np.all(frame[1:]**2 <= 1e-9 * energy)
    # the default taper leaks only into the first neighbour
    frame = np.abs(stft(TimeSignal(np.ones(512))).values[0])
    assert np.argmax(frame) == 0
    assert np.all(frame[2:]**2 <= 5e-3 * np.sum(frame**2))


def test_one_second_shape():
    spec = stft(TimeSignal(np.zeros(16000) + 0.1))
    assert spec.shape == (61, 257)
    assert stft_frames(16000, 512, 256) == 61


def test_tone_peak_bin():
    t = np.arange(16000) / 16000
    spec = stft(TimeSignal(np.sin(2 * np.pi * 1000 * t)))
    assert np.all(np.argmax(np.abs(spec.values), axis=1) == 32)


def test_too_short_signal():
    with pytest.raises(ValueError):
        stft(TimeSignal(np.ones(100)))


def test_roundtrip_white_noise(rng):
    x = rng.standard_normal(16000)
    y = istft(stft(TimeSignal(x))).samples
    inner = slice(512, len(y) - 512)
    assert np.max(np.abs(y[inner] - x[inner])) < 1e-6


def test_zero_spectrogram_gives_zero_signal():
    spec = ComplexSpectrogram(np.zeros((10, 257)), 512, 256)
    assert not np.any(istft(spec).samples)


def test_energy_preserved_speech_shaped():
    x = speech_like(3.0, 16000, rng=5)
    y = istft(stft(TimeSignal(x))).samples
    inner = slice(256, y.size - 256)
    e_in, e_out = np.sum(x[inner]**2), np.sum(y[inner]**2)
    assert abs(e_out / e_in - 1) < 1e-3


def test_bad_window_rejected(rng):
    cfg = StftConfig(window="hann")
    spec = stft(TimeSignal(rng.standard_normal(4000)), cfg)
    with pytest.raises(ValueError, match="reconstruction"):
        istft(spec)


def test_hop_longer_than_frame_rejected(rng):
    with pytest.raises(ValueError):
        stft(TimeSignal(rng.standard_normal(4000)), StftConfig(frame_ms=16, hop_ms=32))


def test_time_signal_validation():
    with pytest.raises(ValueError):
        TimeSignal(np.ones((2, 3)))
    with pytest.raises(ValueError):
        TimeSignal(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        TimeSignal(np.ones(3), 0)


def test_multi_matches_single(rng):
    x = rng.standard_normal((3, 5000))
    multi = stft_multi(x)
    for m in range(3):
        np.testing.assert_allclose(multi[m], stft(TimeSignal(x[m])).values, atol=1e-12)
    y = istft_multi(multi, length=5000)
    assert y.shape == (3, 5000)


def test_spectrogram_is_read_only():
    spec = ComplexSpectrogram(np.zeros((2, 257)), 512, 256)
    with pytest.raises(ValueError):
        spec.values[0, 0] = 1


@given(st.integers(min_value=512, max_value=6000), st.integers(0, 2**32 - 1))
def test_roundtrip_any_length(n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    spec = stft(TimeSignal(x))
    T = spec.shape[0]
    covered = (T - 1) * 256 + 512
    y = istft(spec, length=n).samples
    assert y.size == n
    # interior samples covered by two frames reconstruct exactly
    np.testing.assert_allclose(y[256:covered - 256], x[256:covered - 256], atol=1e-9)


@given(st.floats(0.1, 10.0), st.integers(0, 2**32 - 1))
def test_stft_linear(a, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal(2048), r.standard_normal(2048)
    lhs = stft(TimeSignal(a * x + y)).values
    rhs = a * stft(TimeSignal(x)).values + stft(TimeSignal(y)).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)
