"""
Time synchronization: GCC-PHAT relative delays against the best channel,
then integer-sample alignment trimmed to the common region.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .spectral import DEFAULT_FS, TimeSignal

logger = logging.getLogger(__name__)

PHAT_FLOOR = 1e-12
DEFAULT_MAX_LAG_S = 0.6


@dataclass(frozen=True)
class DelayEstimate:
    delay_samples: int
    peak_value: float
    reference_index: int | None = None


def _arr(x):
    return x.samples if isinstance(x, TimeSignal) else np.asarray(x, dtype=float)


def _next_pow2(n):
    return 1 << (int(n) - 1).bit_length()


def gcc_phat(sig, ref, max_lag=None, reference_index=None):
    """Delay of ``sig`` relative to ``ref`` (positive: ``sig`` lags) from
    the phase-transform cross-correlation over the whole signals, searched
    within +-``max_lag`` samples. Ties go to the smallest |lag|, then the
    negative one."""
    if isinstance(sig, TimeSignal) and isinstance(ref, TimeSignal) \
            and sig.sample_rate != ref.sample_rate:
        raise ValueError("sample rates differ")
    a, b = _arr(sig), _arr(ref)
    if not np.any(a) or not np.any(b):
        raise ValueError("zero-energy input to gcc_phat")
    n_fft = _next_pow2(a.size + b.size)
    if max_lag is None:
        max_lag = min(a.size, b.size) - 1
    max_lag = int(min(max_lag, n_fft // 2 - 1))
    cross = np.fft.rfft(a, n_fft) * np.conj(np.fft.rfft(b, n_fft))
    cross /= np.maximum(np.abs(cross), PHAT_FLOOR)
    cc = np.fft.irfft(cross, n_fft)
    lags = np.concatenate([np.arange(0, max_lag + 1), np.arange(-max_lag, 0)])
    vals = np.concatenate([cc[:max_lag + 1], cc[n_fft - max_lag:]])
    # order candidates by |lag| so argmax tie-breaks toward zero lag
    order = np.lexsort((lags, np.abs(lags)))
    best = order[np.argmax(vals[order])]
    return DelayEstimate(int(lags[best]), float(vals[best]), reference_index)


@dataclass
class SyncResult:
    """Aligned channels and how they were cut from the inputs.

    ``aligned[m] == channels[m][offsets[m]:offsets[m] + length]``.
    """
    aligned: np.ndarray
    delays: np.ndarray
    reference_index: int
    offsets: np.ndarray
    length: int
    peaks: np.ndarray = None
    failed: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def cut(self, x):
        """Apply the same per-channel trimming to another (M, n) array on the
        input time base."""
        x = np.asarray(x)
        return np.stack([x[m, o:o + self.length] for m, o in enumerate(self.offsets)])

    def report(self, ground_truth=None):
        rows = []
        for m, d in enumerate(self.delays):
            row = {"channel": m, "estimated_delay_samples": int(d),
                   "peak_value": None if self.peaks is None else float(self.peaks[m])}
            if ground_truth is not None:
                row["ground_truth_delay_samples"] = int(ground_truth[m])
            rows.append(row)
        return {"reference_index": self.reference_index, "channels": rows,
                "failed": list(self.failed), "offsets": self.offsets.tolist(),
                "length": self.length}

    def to_json(self, ground_truth=None):
        return json.dumps(self.report(ground_truth), indent=2)


def align(channels, delays, reference_index=0):
    """Shift each channel by its delay relative to the reference and trim
    all of them to the common valid region."""
    x = np.atleast_2d(np.asarray(channels, dtype=float))
    d = np.asarray(delays, dtype=int)
    n = x.shape[1]
    start = max(0, int(np.max(-d)))
    stop = min(n, int(np.min(n - d)))
    if stop <= start:
        raise ValueError("delays leave no overlapping region")
    offsets = start + d
    length = stop - start
    aligned = np.stack([x[m, o:o + length] for m, o in enumerate(offsets)])
    return SyncResult(aligned, d, int(reference_index), offsets, length)


def synchronize(channels, q, max_lag=None, fs=DEFAULT_FS):
    """Align every channel to the highest-weight channel by GCC-PHAT.

    Channels whose delay cannot be estimated are passed through unshifted and
    listed in ``failed``.
    """
    x = np.atleast_2d(np.asarray(channels, dtype=float))
    q = np.asarray(q, dtype=float)
    M = x.shape[0]
    if q.size != M:
        raise ValueError("one weight per channel required")
    if max_lag is None:
        max_lag = int(round(DEFAULT_MAX_LAG_S * fs))
    ref = int(np.argmax(q))
    delays = np.zeros(M, dtype=int)
    peaks = np.zeros(M)
    peaks[ref] = np.nan
    failed, notes = [], []
    for m in range(M):
        if m == ref:
            continue
        try:
            est = gcc_phat(x[m], x[ref], max_lag, ref)
        except ValueError as err:
            failed.append(m)
            notes.append(f"channel {m}: {err}")
            logger.warning("sync: channel %d passed through unshifted (%s)", m, err)
            continue
        delays[m] = est.delay_samples
        peaks[m] = est.peak_value
    res = align(x, delays, ref)
    res.peaks = peaks
    res.failed = failed
    res.warnings = notes
    return res
