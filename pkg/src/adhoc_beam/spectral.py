"""
STFT analysis / synthesis shared by every other module.

Frames are taken without padding, so a signal of ``n`` samples gives
``1 + (n - frame) // hop`` frames. Synthesis is weighted overlap-add,
normalized by the accumulated analysis*synthesis window.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_FS = 16000

__all__ = [
    "TimeSignal", "StftConfig", "ComplexSpectrogram", "stft", "istft",
    "stft_multi", "istft_multi", "stft_frames", "DEFAULT_FS"
]


@dataclass(frozen=True)
class TimeSignal:
    samples: np.ndarray
    sample_rate: int = DEFAULT_FS

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise ValueError(f"TimeSignal expects 1-D samples, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("TimeSignal samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


def _window(name, n):
    # periodic windows; these are the ones with exact overlap-add sums
    if name == "sqrt_hann":
        return np.sqrt(0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n))
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    if name in ("rect", "boxcar"):
        return np.ones(n)
    raise ValueError(f"unknown window {name!r}")


@dataclass(frozen=True)
class StftConfig:
    frame_ms: float = 32.0
    hop_ms: float = 16.0
    fft_size: int = 512
    window: str = "sqrt_hann"

    def frame_len(self, fs):
        return int(round(self.frame_ms * fs / 1000))

    def hop_len(self, fs):
        return int(round(self.hop_ms * fs / 1000))

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1

    def check(self, fs):
        frame, hop = self.frame_len(fs), self.hop_len(fs)
        if hop <= 0 or frame <= 0:
            raise ValueError("frame and hop must be positive")
        if hop > frame:
            raise ValueError(f"hop ({hop}) exceeds frame length ({frame})")
        if frame > self.fft_size:
            raise ValueError(f"frame length {frame} exceeds fft_size {self.fft_size}")
        return frame, hop


@dataclass(frozen=True)
class ComplexSpectrogram:
    """T x F one-sided spectrum plus what istft needs to invert it."""
    values: np.ndarray
    frame_len_samples: int
    hop_samples: int
    sample_rate: int = DEFAULT_FS
    fft_size: int = 512
    window: str = "sqrt_hann"
    n_samples: int | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError(f"spectrogram must be T x F with T >= 1, got {v.shape}")
        if v.shape[1] != self.fft_size // 2 + 1:
            raise ValueError(
                f"expected {self.fft_size // 2 + 1} bins, got {v.shape[1]}")
        if self.frame_len_samples < self.hop_samples:
            raise ValueError("frame_len_samples must be >= hop_samples")
        v = v.astype(complex, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def magnitude(self):
        return np.abs(self.values)

    def with_values(self, values):
        return ComplexSpectrogram(values, self.frame_len_samples, self.hop_samples,
                                  self.sample_rate, self.fft_size, self.window,
                                  self.n_samples)


def stft_frames(n_samples, frame, hop):
    """Number of full frames in ``n_samples`` samples."""
    if n_samples < frame:
        return 0
    return 1 + (n_samples - frame) // hop


def _stft_array(x, frame, hop, fft_size, win):
    n_frames = stft_frames(x.shape[-1], frame, hop)
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[..., idx] * win
    return np.fft.rfft(frames, n=fft_size, axis=-1)


def stft(sig, cfg=StftConfig()):
    """Analyse a TimeSignal into a T x F ComplexSpectrogram."""
    if not isinstance(sig, TimeSignal):
        sig = TimeSignal(np.asarray(sig, dtype=float))
    fs = sig.sample_rate
    frame, hop = cfg.check(fs)
    if len(sig) < frame:
        raise ValueError(
            f"signal of {len(sig)} samples is shorter than one frame ({frame})")
    win = _window(cfg.window, frame)
    values = _stft_array(sig.samples, frame, hop, cfg.fft_size, win)
    return ComplexSpectrogram(values, frame, hop, fs, cfg.fft_size, cfg.window,
                              n_samples=len(sig))


def stft_multi(x, fs=DEFAULT_FS, cfg=StftConfig()):
    """Batch STFT of an (M, n) array; returns (M, T, F) complex."""
    frame, hop = cfg.check(fs)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] < frame:
        raise ValueError(
            f"signal of {x.shape[-1]} samples is shorter than one frame ({frame})")
    return _stft_array(x, frame, hop, cfg.fft_size, _window(cfg.window, frame))


def _check_reconstruction(win, hop):
    """Interior sum of the squared window must be a nonzero constant."""
    frame = win.size
    wsq = win**2
    reps = int(np.ceil(frame / hop))
    acc = np.zeros(hop)
    for k in range(reps):
        seg = wsq[k * hop:(k + 1) * hop]
        acc[:seg.size] += seg
    if acc.min() <= 0 or np.ptp(acc) > 1e-10 * acc.max():
        raise ValueError(
            f"window/hop pair (frame {frame}, hop {hop}) does not satisfy "
            "the overlap-add reconstruction condition")
    return acc[0]


def _istft_array(values, frame, hop, fft_size, win, length=None):
    scale = _check_reconstruction(win, hop)
    frames = np.fft.irfft(values, n=fft_size, axis=-1)[..., :frame] * win
    n_frames = values.shape[-2]
    n_out = frame + hop * (n_frames - 1)
    out = np.zeros(values.shape[:-2] + (n_out,))
    for t in range(n_frames):
        out[..., t * hop:t * hop + frame] += frames[..., t, :]
    # edge samples see fewer frames; divide by the actual window sum there
    wsum = np.zeros(n_out)
    for t in range(n_frames):
        wsum[t * hop:t * hop + frame] += win**2
    wsum[wsum < 1e-8 * scale] = np.inf
    out = out / wsum
    if length is not None:
        if length >= n_out:
            out = np.concatenate(
                [out, np.zeros(out.shape[:-1] + (length - n_out,))], axis=-1)
        else:
            out = out[..., :length]
    return out


def istft(spec, length=None):
    """Invert a ComplexSpectrogram produced by :func:`stft`.

    ``length`` (default: the analysed signal length, if recorded) pads or
    trims the output.
    """
    win = _window(spec.window, spec.frame_len_samples)
    if length is None:
        length = spec.n_samples
    out = _istft_array(spec.values, spec.frame_len_samples, spec.hop_samples,
                       spec.fft_size, win, length)
    return TimeSignal(out, spec.sample_rate)


def istft_multi(values, fs=DEFAULT_FS, cfg=StftConfig(), length=None):
    frame, hop = cfg.check(fs)
    return _istft_array(values, frame, hop, cfg.fft_size,
                        _window(cfg.window, frame), length)
