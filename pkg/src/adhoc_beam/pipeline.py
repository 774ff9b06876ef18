"""
Per-scene processing: channel weights, synchronization arm, masks, then
selection + enhancement + evaluation for each algorithm.
"""

from dataclasses import dataclass, field

import numpy as np

from .beamformer import enhance
from .estimation import (MlpMaskEstimator, MlpWeightEstimator, irm_array,
                         pool_features, snr_variant_value)
from .metrics import evaluate
from .selection import default_j, default_n, select
from .spectral import StftConfig, stft_multi
from .sync import DEFAULT_MAX_LAG_S, align, synchronize

SYNC_MODES = ("none", "ground_truth", "estimated")


@dataclass
class PipelineConfig:
    gamma: float = 0.5
    n: int | None = None
    sigma: float = 1.0
    J: int | None = None
    max_lag_s: float = DEFAULT_MAX_LAG_S
    stft: StftConfig = field(default_factory=StftConfig)
    mask_model: object = None       # MlpModel; None means oracle masks
    weight_model: object = None     # MlpModel; None means oracle weights


@dataclass
class PreparedScene:
    q: np.ndarray
    sync: object
    aligned: np.ndarray             # (M, L) synchronized observed signals
    direct: np.ndarray              # (M, L) direct+early, same cut
    spectra: np.ndarray             # (M, T, F)
    masks: np.ndarray               # (M, T, F)
    sync_mode: str
    fs: int = 16000


def oracle_weights(scene):
    return np.array([snr_variant_value(scene.direct[m], scene.noise[m])
                     for m in range(scene.n_mics)])


def mlp_weights(observed, cfg):
    spectra = stft_multi(observed, cfg=cfg.stft)
    mask_est = MlpMaskEstimator(cfg.mask_model)
    w_est = MlpWeightEstimator(cfg.weight_model)
    q = []
    for m in range(observed.shape[0]):
        mask = mask_est.estimate(spectra[m])
        q.append(w_est.estimate(pool_features(np.abs(spectra[m]), mask)).q)
    return np.array(q)


def channel_weights(scene, cfg, observed=None):
    if cfg.weight_model is None:
        return oracle_weights(scene)
    if cfg.mask_model is None:
        raise ValueError("MLP channel weights need a mask model too")
    return mlp_weights(scene.observed() if observed is None else observed, cfg)


def prepare(scene, sync_mode, cfg=None, q=None):
    """Synchronize a scene under one arm and compute spectra and masks."""
    cfg = cfg or PipelineConfig()
    observed = scene.observed()
    if q is None:
        q = channel_weights(scene, cfg, observed)
    ref = int(np.argmax(q))
    if sync_mode == "none":
        res = align(observed, np.zeros(scene.n_mics, dtype=int), ref)
    elif sync_mode == "ground_truth":
        # device offset plus direct-path propagation difference
        arr = scene.arrival_samples
        res = align(observed, arr - arr[ref], ref)
    elif sync_mode == "estimated":
        res = synchronize(observed, q, int(round(cfg.max_lag_s * scene.fs)), scene.fs)
    else:
        raise ValueError(f"unknown sync mode {sync_mode!r}; expected one of {SYNC_MODES}")
    aligned = res.aligned
    direct = res.cut(scene.delayed("direct"))
    spectra = stft_multi(aligned, scene.fs, cfg.stft)
    if cfg.mask_model is None:
        tail = res.cut(scene.delayed("tail"))
        noise = res.cut(scene.delayed("noise"))
        masks = irm_array(stft_multi(direct, scene.fs, cfg.stft),
                          stft_multi(tail, scene.fs, cfg.stft),
                          stft_multi(noise, scene.fs, cfg.stft))
    else:
        est = MlpMaskEstimator(cfg.mask_model)
        masks = np.stack([est.estimate(spectra[m]).values for m in range(scene.n_mics)])
    return PreparedScene(np.asarray(q), res, aligned, direct, spectra, masks, sync_mode,
                         scene.fs)


def run_arm(prep, algorithm, cfg=None, rng=None, gamma=None):
    """Select, enhance and evaluate one algorithm on a prepared scene.

    ``algorithm`` may also be ``"random"``: one channel drawn from ``rng``.
    Returns a dict with the evaluation and selection details.
    """
    cfg = cfg or PipelineConfig()
    gamma = cfg.gamma if gamma is None else gamma
    M = prep.q.size
    if algorithm == "random":
        rng = np.random.default_rng(rng)
        p = np.zeros(M)
        p[int(rng.integers(M))] = 1.0
    else:
        sel = select(algorithm, prep.q, gamma=gamma,
                     n=cfg.n if cfg.n is not None else default_n(M),
                     sigma=cfg.sigma, J=cfg.J if cfg.J is not None else default_j(M),
                     y=prep.spectra if algorithm == "learningN" else None)
        p = sel.p
    out, ref, _ = enhance(prep.aligned, prep.masks, p, prep.q, prep.spectra, cfg.stft, prep.fs)
    res = evaluate(prep.direct[ref], out)
    return {"si_sdr_db": res.si_sdr_db, "snr_variant": res.snr_variant,
            "n_selected": int(np.count_nonzero(p)), "reference": ref,
            "support": "".join("1" if v > 0 else "0" for v in p), "p": p, "output": out}
