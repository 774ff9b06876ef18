"""
Mask-driven MVDR.

Shapes: spectrograms are (M, T, F); masks (M, T, F); per-frequency
covariances (F, M, M); weights and steering vectors (F, M).
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

LOADING = 1e-6
EIGEN_GAP_TOL = 1e-10


@dataclass
class CovarianceSet:
    phi_xx: np.ndarray
    phi_nn: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    degenerate: np.ndarray          # (F,) bool: no speech or no noise weight


@dataclass
class BeamformerSolution:
    weights: np.ndarray             # (F, M)
    steering: np.ndarray            # (F, M)
    reference: int
    degenerate: np.ndarray          # (F,) bool
    low_confidence: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def debug_json(self):
        rows = []
        for f in range(self.weights.shape[0]):
            rows.append({
                "bin": f,
                "degenerate": bool(self.degenerate[f]),
                "condition_number": _get(self.diagnostics, "condition", f),
                "eigen_gap": _get(self.diagnostics, "eigen_gap", f),
                "weight_norm": float(np.linalg.norm(self.weights[f])),
            })
        return json.dumps({"reference": self.reference, "bins": rows})


def _get(d, key, f):
    v = d.get(key)
    return None if v is None else float(v[f])


def mask_products(masks):
    """Speech weight eta = prod_i mask_i, noise weight xi = prod_i (1 - mask_i)."""
    m = np.asarray([getattr(x, "values", x) for x in masks], dtype=float)
    if m.ndim != 3:
        raise ValueError("masks must all be T x F with equal shapes")
    return np.prod(m, axis=0), np.prod(1 - m, axis=0)


def weighted_covariance(y, w):
    """Per-frequency sum_t w y y^H / sum_t w.

    ``y`` is (M, T, F), ``w`` is (T, F). Returns ``(phi, degenerate)`` where
    degenerate bins (zero total weight) hold zeros.
    """
    y = np.asarray(y)
    w = np.asarray(w, dtype=float)
    if y.shape[1:] != w.shape:
        raise ValueError(f"weight shape {w.shape} does not match {y.shape[1:]}")
    # rescale per bin: mask products can be tiny and the normalization cancels it
    peak = w.max(axis=0)
    degenerate = peak <= 0
    scale = np.where(degenerate, 1.0, peak)
    wn = w / scale
    total = wn.sum(axis=0)
    phi = np.einsum("tf,itf,jtf->fij", wn, y, y.conj())
    phi /= np.where(degenerate, 1.0, total)[:, None, None]
    phi[degenerate] = 0
    phi = 0.5 * (phi + np.conj(np.swapaxes(phi, -1, -2)))
    return phi, degenerate


def principal_steering(phi, reference=0):
    """Unit-norm dominant eigenvector of a Hermitian matrix with the
    reference component made real and nonnegative.

    Returns ``(c, low_confidence, gap)``; a top eigen-gap below
    ``EIGEN_GAP_TOL`` (relative to the top eigenvalue) flags low confidence,
    and a fully degenerate matrix returns the reference unit vector.
    """
    phi = np.asarray(phi)
    M = phi.shape[0]
    w, V = np.linalg.eigh(0.5 * (phi + phi.conj().T))
    top = w[-1]
    gap = top - w[-2] if M > 1 else top
    scale = max(abs(top), 1e-300)
    low = (M > 1 and gap <= EIGEN_GAP_TOL * scale) or top <= 0
    if np.allclose(w, w[-1], rtol=0, atol=EIGEN_GAP_TOL * scale):
        c = np.zeros(M, dtype=complex)
        c[reference] = 1.0
        return c, True, gap
    c = V[:, -1].astype(complex)
    ref = c[reference]
    if abs(ref) > 0:
        c = c * (np.conj(ref) / abs(ref))
    c[reference] = abs(c[reference])
    return c, bool(low), gap


def _batched_steering(phi, reference):
    w, V = np.linalg.eigh(phi)
    c = V[:, :, -1]
    top = w[:, -1]
    second = w[:, -2] if phi.shape[-1] > 1 else np.zeros_like(top)
    gap = top - second
    scale = np.maximum(np.abs(top), 1e-300)
    low = (gap <= EIGEN_GAP_TOL * scale) | (top <= 0)
    ref = c[:, reference]
    mag = np.abs(ref)
    rot = np.where(mag > 0, np.conj(ref) / np.where(mag > 0, mag, 1), 1)
    c = c * rot[:, None]
    c[:, reference] = np.abs(c[:, reference])
    full_degenerate = (np.ptp(w, axis=1) <= EIGEN_GAP_TOL * scale)
    if full_degenerate.any():
        e = np.zeros(phi.shape[-1], dtype=complex)
        e[reference] = 1
        c[full_degenerate] = e
    return c, low, gap


def load_diagonal(phi, delta=LOADING):
    """phi + delta * trace(phi) / M * I (works batched over leading axes)."""
    M = phi.shape[-1]
    tr = np.real(np.trace(phi, axis1=-2, axis2=-1))
    return phi + (delta * tr / M)[..., None, None] * np.eye(M)


def mvdr_weights(phi_nn, c, delta=LOADING):
    """w = Phi^-1 c / (c^H Phi^-1 c) with diagonal loading on Phi.

    Batched: ``phi_nn`` (..., M, M), ``c`` (..., M).
    """
    phi_nn = np.asarray(phi_nn)
    c = np.asarray(c, dtype=complex)
    if not np.any(c):
        raise ValueError("steering vector is zero")
    tr = np.real(np.trace(phi_nn, axis1=-2, axis2=-1))
    if np.any(tr <= 0):
        raise ValueError("noise covariance is identically zero")
    loaded = load_diagonal(phi_nn, delta)
    num = np.linalg.solve(loaded, c[..., None])[..., 0]
    den = np.einsum("...m,...m->...", c.conj(), num)
    return num / den[..., None]


def apply_beamformer(w, y):
    """x_hat(t, f) = w(f)^H y(t, f) for y (M, T, F) and w (F, M)."""
    y = np.asarray(y)
    w = np.asarray(w)
    if w.shape != (y.shape[2], y.shape[0]):
        raise ValueError(f"weights {w.shape} do not match spectrograms {y.shape}")
    return np.einsum("fm,mtf->tf", w.conj(), y)


def solve_mvdr(y, masks_all, reference, relative=True):
    """Covariances -> steering -> weights for selected-channel spectrograms
    ``y`` (N, T, F), with speech / noise weights taken from the masks of
    all channels. ``reference`` indexes into ``y``.

    With ``relative`` the steering vector is rescaled so its reference
    entry is 1, making the output an estimate of the reference channel's
    speech image rather than of a unit-norm projection.
    """
    eta, xi = mask_products(masks_all)
    phi_xx, deg_x = weighted_covariance(y, eta)
    phi_nn, deg_n = weighted_covariance(y, xi)
    tr_n = np.real(np.trace(phi_nn, axis1=-2, axis2=-1))
    tr_x = np.real(np.trace(phi_xx, axis1=-2, axis2=-1))
    degenerate = deg_x | deg_n | (tr_n <= 0) | (tr_x <= 0)
    F, N = y.shape[2], y.shape[0]
    c = np.zeros((F, N), dtype=complex)
    w = np.zeros((F, N), dtype=complex)
    c[:, reference] = 1
    w[:, reference] = 1
    low = np.zeros(F, dtype=bool)
    gap = np.zeros(F)
    cond = np.full(F, np.nan)
    ok = ~degenerate
    if ok.any():
        c_ok, low_ok, gap_ok = _batched_steering(phi_xx[ok], reference)
        if relative:
            ref_mag = np.real(c_ok[:, reference])
            good = ref_mag > 1e-8
            c_ok[good] = c_ok[good] / ref_mag[good, None]
        c[ok], low[ok], gap[ok] = c_ok, low_ok, gap_ok
        w[ok] = mvdr_weights(phi_nn[ok], c_ok)
        cond[ok] = np.linalg.cond(load_diagonal(phi_nn[ok]))
    sol = BeamformerSolution(w, c, reference, degenerate, low,
                             {"eigen_gap": gap, "condition": cond})
    return sol, CovarianceSet(phi_xx, phi_nn, eta, xi, degenerate)


def enhance(aligned, masks, p, q=None, spectra=None, stft_cfg=None, fs=16000):
    """Selected-channel enhancement of synchronized signals.

    ``aligned`` (M, n) time signals, ``masks`` (M, T, F) for all channels,
    ``p`` the selection vector, ``q`` the channel weights (picks the
    reference among selected channels; defaults to p). With one channel
    selected its waveform is returned unchanged. Otherwise each selected
    spectrogram is scaled by p_i and beamformed.

    Returns ``(output (n,), reference channel index, solution or None)``.
    """
    from .spectral import StftConfig, istft_multi, stft_multi

    stft_cfg = stft_cfg or StftConfig()
    aligned = np.atleast_2d(np.asarray(aligned, dtype=float))
    p = np.asarray(getattr(p, "p", p), dtype=float)
    q = p if q is None else np.asarray(q, dtype=float)
    support = np.flatnonzero(p > 0)
    if support.size == 0:
        raise ValueError("no channel selected")
    ref = int(support[np.argmax(q[support])])
    if support.size == 1:
        return aligned[ref].copy(), ref, None
    if spectra is None:
        spectra = stft_multi(aligned, fs, stft_cfg)
    Y = spectra[support] * p[support][:, None, None]
    ref_local = int(np.flatnonzero(support == ref)[0])
    sol, _ = solve_mvdr(Y, masks, ref_local)
    X = apply_beamformer(sol.weights, Y)
    out = istft_multi(X, fs, stft_cfg, length=aligned.shape[1])
    return out, ref, sol
