"""
Time-frequency masks and per-channel quality weights.

Oracle estimators read the ground-truth decomposition of a simulated
scene; MLP estimators run a trained :class:`~adhoc_beam.mlp.MlpModel`.
"""

from dataclasses import dataclass

import numpy as np

from .mlp import MlpModel, mlp_forward
from .spectral import ComplexSpectrogram, TimeSignal

IRM_FLOOR = 1e-12
LOG_FLOOR = 1e-8


@dataclass(frozen=True)
class TFMask:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"mask must be T x F, got {v.shape}")
        if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
            raise ValueError("mask entries must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class PooledFeature:
    noisy_pool: np.ndarray
    mask_pool: np.ndarray

    def vector(self):
        return np.concatenate([self.noisy_pool, self.mask_pool])


@dataclass(frozen=True)
class ChannelWeight:
    q: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"channel weight {self.q} outside [0, 1]")

    def __float__(self):
        return float(self.q)


def _vals(x):
    return x.values if isinstance(x, ComplexSpectrogram) else np.asarray(x)


def irm_array(direct, tail, noise):
    """|x| / (|x| + |h + n|) elementwise on arrays of any matching shape."""
    direct, tail, noise = np.asarray(direct), np.asarray(tail), np.asarray(noise)
    if not (direct.shape == tail.shape == noise.shape):
        raise ValueError(f"shape mismatch: {direct.shape}, {tail.shape}, {noise.shape}")
    ax = np.abs(direct)
    den = np.maximum(ax + np.abs(tail + noise), IRM_FLOOR)
    return ax / den


def ideal_ratio_mask(direct, tail, noise):
    """Ideal ratio mask of the direct + early part against late
    reverberation plus noise. Silent bins get 0."""
    return TFMask(irm_array(_vals(direct), _vals(tail), _vals(noise)))


def snr_variant_value(direct, noise):
    """sum|x| / (sum|x| + sum|n|) on raw sample arrays."""
    sx = float(np.sum(np.abs(direct)))
    sn = float(np.sum(np.abs(noise)))
    if sx + sn == 0:
        raise ValueError("both components are zero; channel quality undefined")
    return sx / (sx + sn)


def true_channel_weight(direct, noise):
    """Quality target of one channel from its time-domain direct sound and
    additive noise (sums of absolute sample values)."""
    d = direct.samples if isinstance(direct, TimeSignal) else np.asarray(direct)
    n = noise.samples if isinstance(noise, TimeSignal) else np.asarray(noise)
    if d.shape != n.shape:
        raise ValueError(f"length mismatch: {d.shape} vs {n.shape}")
    return ChannelWeight(snr_variant_value(d, n))


def pool_features(noisy_mag, mask):
    """Average-pool the noisy magnitude spectrogram and the mask over frames."""
    mag = np.asarray(noisy_mag, dtype=float)
    m = mask.values if isinstance(mask, TFMask) else np.asarray(mask, dtype=float)
    if mag.shape != m.shape:
        raise ValueError(f"shape mismatch: {mag.shape} vs {m.shape}")
    if mag.shape[0] == 0:
        raise ValueError("cannot pool zero frames")
    return PooledFeature(mag.mean(axis=0), m.mean(axis=0))


def context_frames(feat, context):
    """Stack each frame with its neighbours (edges replicated):
    (T, F) -> (T, context * F)."""
    half = context // 2
    padded = np.pad(feat, ((half, half), (0, 0)), mode="edge")
    T = feat.shape[0]
    return np.concatenate([padded[k:k + T] for k in range(context)], axis=1)


def mask_features(noisy_mag, context):
    return context_frames(np.log(np.asarray(noisy_mag) + LOG_FLOOR), context)


# ---------------------------------------------------------------------------
# estimators

class OracleMaskEstimator:
    """Returns the ideal ratio mask from stored ground truth.

    ``direct``, ``tail`` and ``noise`` are the component spectrograms on the
    same time base as the noisy input (i.e. already shifted by whatever
    device delay and synchronization applies to that channel).
    """

    def __init__(self, direct=None, tail=None, noise=None):
        self.truth = None
        if direct is not None:
            self.truth = (_vals(direct), _vals(tail), _vals(noise))

    def estimate(self, noisy):
        if self.truth is None:
            raise ValueError("oracle mask requested without ground truth")
        d, t, n = self.truth
        if _vals(noisy).shape != d.shape:
            raise ValueError("noisy spectrogram does not match the stored ground truth")
        return TFMask(irm_array(d, t, n))


class MlpMaskEstimator:
    def __init__(self, model):
        self.model = model

    def estimate(self, noisy):
        mag = np.abs(_vals(noisy))
        feats = mask_features(mag, self.model.context)
        return TFMask(mlp_forward(self.model, feats))


class OracleWeightEstimator:
    def __init__(self, direct=None, noise=None):
        self.direct = direct
        self.noise = noise

    def estimate(self, feat=None):
        if self.direct is None:
            raise ValueError("oracle weight requested without ground truth")
        return true_channel_weight(self.direct, self.noise)


class MlpWeightEstimator:
    def __init__(self, model):
        self.model = model

    def estimate(self, feat):
        v = feat.vector() if isinstance(feat, PooledFeature) else np.asarray(feat, dtype=float)
        if v.shape != (self.model.n_in,):
            raise ValueError(f"feature dimension {v.shape} != {self.model.n_in}")
        return ChannelWeight(float(mlp_forward(self.model, v)[0]))


def mask_model(n_bins=257, hidden=64, context=7, rng=None):
    return MlpModel.init([n_bins * context, hidden, hidden, n_bins], rng, context)


def weight_model(n_bins=257, hidden=64, rng=None):
    return MlpModel.init([2 * n_bins, hidden, hidden, 1], rng, 1)
