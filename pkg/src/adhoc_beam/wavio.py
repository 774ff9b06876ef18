"""RIFF WAV read/write (16-bit PCM and 32-bit float, mono or multichannel)."""

import logging
import warnings

import numpy as np
from scipy.io import wavfile

logger = logging.getLogger(__name__)


def read_wav(path):
    """Return ``(samples, fs)``; samples are float in [-1, 1], shaped
    (n,) for mono and (channels, n) for multichannel."""
    fs, data = wavfile.read(path)
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample type {data.dtype}")
    if x.ndim == 2:
        x = x.T
    return x, int(fs)


def write_wav(path, samples, fs, subtype="PCM_16"):
    """Write mono (n,) or multichannel (channels, n) audio.

    For PCM_16 out-of-range samples saturate; the number of clipped samples
    is returned (0 for float output) and a warning is issued when nonzero.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 2:
        x = x.T
    elif x.ndim != 1:
        raise ValueError(f"expected 1-D or 2-D samples, got {x.shape}")
    n_clipped = 0
    if subtype == "PCM_16":
        scaled = np.round(x * 32768.0)
        over = (scaled > 32767) | (scaled < -32768)
        n_clipped = int(over.sum())
        data = np.clip(scaled, -32768, 32767).astype(np.int16)
    elif subtype == "FLOAT":
        data = x.astype(np.float32)
    else:
        raise ValueError(f"unknown subtype {subtype!r}")
    if n_clipped:
        warnings.warn(f"{path}: {n_clipped} samples clipped on write", RuntimeWarning)
        logger.warning("%s: %d samples clipped", path, n_clipped)
    wavfile.write(path, int(fs), data)
    return n_clipped
