"""
Synthetic test material: speech-like utterances (voiced harmonic chirps and
unvoiced noise bursts separated by pauses) and colored noise banks.
"""

from functools import lru_cache

import numpy as np
from scipy.signal import butter, lfilter, sosfilt

from .spectral import DEFAULT_FS

NOISE_TYPES = ("babble", "factory", "white")


@lru_cache(maxsize=8)
def _band_sos(fs):
    return butter(2, [100, min(7000, 0.45 * fs)], btype="band", fs=fs, output="sos")


def _speech_shaped(n, fs, rng):
    # roughly -6 dB/oct above ~500 Hz, bandlimited to 100 Hz - 7 kHz
    x = sosfilt(_band_sos(fs), rng.standard_normal(n))
    return lfilter([1.0], [1.0, -0.9], x) * 0.3


def _harmonic_chirp(n, fs, rng):
    f0_start, f0_end = rng.uniform(90, 260, size=2)
    f0 = np.linspace(f0_start, f0_end, n)
    phase = 2 * np.pi * np.cumsum(f0) / fs
    n_harm = int(4000 // max(f0_start, f0_end))
    # two formant-like emphasis regions
    formants = rng.uniform([300, 1000], [900, 2600])
    k = np.arange(1, n_harm + 1)[:, None]
    offsets = rng.uniform(0, 2 * np.pi, size=(n_harm, 1))
    fk = k * f0[None, :]
    gain = sum(np.exp(-0.5 * ((fk - fm) / 150.0)**2) for fm in formants)
    return np.sum((0.2 / k + gain) * np.sin(k * phase[None, :] + offsets), axis=0)


def speech_like(duration_s=3.0, fs=DEFAULT_FS, rng=None):
    """Speech-like test signal with syllabic structure, unit RMS over the
    whole utterance."""
    rng = np.random.default_rng(rng)
    n = int(round(duration_s * fs))
    out = np.zeros(n)
    pos = int(rng.uniform(0.02, 0.1) * fs)
    while pos < n:
        seg = int(rng.uniform(0.08, 0.3) * fs)
        seg = min(seg, n - pos)
        kind = rng.choice(["voiced", "unvoiced", "pause"], p=[0.55, 0.25, 0.2])
        if kind != "pause" and seg > 16:
            if kind == "voiced":
                s = _harmonic_chirp(seg, fs, rng) + 0.1 * _speech_shaped(seg, fs, rng)
            else:
                s = _speech_shaped(seg, fs, rng)
                s = np.diff(s, prepend=0.0) * 4
            env = np.hanning(seg) ** 0.5
            out[pos:pos + seg] += s / (np.std(s) + 1e-12) * env * rng.uniform(0.5, 1.5)
        pos += seg + int(rng.uniform(0.0, 0.06) * fs)
    rms = np.sqrt(np.mean(out**2))
    return out / rms if rms > 0 else out


def tone_burst(duration_s, fs=DEFAULT_FS, rng=None, n_tones=3):
    """Sum of steady random tones with a slow on/off envelope; used for
    small mask-estimation toys."""
    rng = np.random.default_rng(rng)
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    freqs = rng.uniform(200, 3000, size=n_tones)
    x = sum(np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) for f in freqs)
    env = (np.sin(2 * np.pi * rng.uniform(1, 3) * t + rng.uniform(0, 2 * np.pi)) > 0)
    return x * env


def noise_bank(kind, n_samples, fs=DEFAULT_FS, rng=None):
    """Seeded noise of the given type, unit RMS."""
    rng = np.random.default_rng(rng)
    if kind == "white":
        x = rng.standard_normal(n_samples)
    elif kind == "babble":
        n_talkers = 6
        chunk = int(3 * fs)
        x = np.zeros(n_samples)
        for _ in range(n_talkers):
            parts = []
            while sum(p.size for p in parts) < n_samples:
                parts.append(speech_like(chunk / fs, fs, rng))
            x += np.concatenate(parts)[:n_samples]
    elif kind == "factory":
        sos = butter(1, 200, btype="high", fs=fs, output="sos")
        x = sosfilt(sos, lfilter([1.0], [1.0, -0.95], rng.standard_normal(n_samples)))
        x /= np.std(x) + 1e-12
        t = np.arange(n_samples) / fs
        hum_f = rng.uniform(50, 150)
        x += 0.5 * sum(np.sin(2 * np.pi * k * hum_f * t) / k for k in range(1, 5))
        # impulsive hits with exponential ring-down
        n_hits = int(n_samples / fs * rng.uniform(2, 6))
        ring = np.exp(-np.arange(int(0.05 * fs)) / (0.008 * fs))
        ring = ring * rng.standard_normal(ring.size)
        for p in rng.integers(0, n_samples, size=n_hits):
            seg = min(ring.size, n_samples - p)
            x[p:p + seg] += 6 * ring[:seg]
    else:
        raise ValueError(f"unknown noise type {kind!r}; expected one of {NOISE_TYPES}")
    return x / (np.sqrt(np.mean(x**2)) + 1e-12)
