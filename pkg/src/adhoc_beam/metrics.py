"""Evaluation of enhanced output against the reference direct sound."""

from dataclasses import dataclass, field

import numpy as np

from .estimation import snr_variant_value
from .spectral import TimeSignal

SI_SDR_CAP_DB = 80.0


def _arr(x):
    return x.samples if isinstance(x, TimeSignal) else np.asarray(x, dtype=float)


def si_sdr(reference, estimate, cap_db=SI_SDR_CAP_DB):
    """Scale-invariant SDR in dB, capped at ``cap_db``.

    The reference is scaled by the least-squares gain onto the estimate;
    no mean removal.
    """
    s = _arr(reference)
    e = _arr(estimate)
    if s.shape != e.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {e.shape}")
    ss = float(np.dot(s, s))
    if ss == 0:
        raise ValueError("reference signal is zero")
    alpha = float(np.dot(e, s)) / ss
    target = alpha * s
    err = float(np.sum((target - e)**2))
    sig = float(np.dot(target, target))
    if err == 0 or sig / err > 10 ** (cap_db / 10):
        return cap_db
    if sig == 0:
        return -cap_db
    return max(-cap_db, 10 * np.log10(sig / err))


def snr_variant(direct, residual_noise):
    """sum|x| / (sum|x| + sum|r|) for the direct sound and the residual."""
    return snr_variant_value(_arr(direct), _arr(residual_noise))


@dataclass
class EvalResult:
    si_sdr_db: float
    snr_variant: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.si_sdr_db):
            raise ValueError("si_sdr must be finite")
        if not 0 <= self.snr_variant <= 1:
            raise ValueError("snr_variant outside [0, 1]")


def evaluate(reference, estimate, **meta):
    """SI-SDR and SNR variant of ``estimate`` against ``reference``; the
    residual for the SNR variant is ``estimate - alpha * reference`` with the
    SI-SDR projection gain."""
    s, e = _arr(reference), _arr(estimate)
    val = si_sdr(s, e)
    alpha = float(np.dot(e, s)) / float(np.dot(s, s))
    resid = e - alpha * s
    return EvalResult(val, snr_variant(alpha * s, resid), dict(meta))
