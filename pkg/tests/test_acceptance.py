"""
Acceptance suite. Each criterion records one PASS/FAIL line (printed in the
pytest terminal summary, or directly when run as a script) and then asserts.
"""

import time

import numpy as np
import pytest

from adhoc_beam.beamformer import enhance, mvdr_weights, weighted_covariance
from adhoc_beam.estimation import irm_array
from adhoc_beam.experiment import (ExperimentConfig, make_scene, run_experiment,
                                   run_gamma_sweep, run_montecarlo, scene_seed)
from adhoc_beam.mlp import MlpModel, loss_and_grads
from adhoc_beam.pipeline import oracle_weights
from adhoc_beam.selection import select_auto_n
from adhoc_beam.spectral import TimeSignal, istft, stft
from adhoc_beam.sync import gcc_phat, synchronize

RESULTS = {}


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def _hpsd(r, M):
    B = r.standard_normal((M, M)) + 1j * r.standard_normal((M, M))
    return B @ B.conj().T + 1e-3 * np.eye(M)


# 1 -------------------------------------------------------------------------

def test_criterion_1_distance_monte_carlo():
    stats, _, sec = run_montecarlo(n_mics=16, n_trials=100_000, seed=0, shape="square",
                                   max_distance=20.0)
    conv, avg, best = stats
    checks = {
        "conv mean": abs(conv.mean_m - 7.28) <= 0.15 * 7.28,
        "avg std < conv std": avg.std_m < conv.std_m,
        "best mean": abs(best.mean_m - 1.92) <= 0.15 * 1.92,
        "P(best > 5 m)": best.prob_greater(5.0) <= 0.05,
        "runtime": sec < 60,
    }
    ok = all(checks.values())
    report(1, ok, f"conventional {conv.mean_m:.2f}/{conv.std_m:.2f} m, ad-hoc average "
                  f"std {avg.std_m:.2f} m, best mic {best.mean_m:.2f} m, "
                  f"P(best>5m)={best.prob_greater(5.0):.3f}, {sec:.2f} s "
                  f"{'' if ok else [k for k, v in checks.items() if not v]}")
    assert ok


# 2 -------------------------------------------------------------------------

def test_criterion_2_odds_rule_equals_energy_threshold():
    r = np.random.default_rng(2)
    mismatches, draws = 0, 0
    for gamma in (0.1, 0.5, 0.9):
        for _ in range(10_000):
            M = int(r.integers(1, 17))
            X = r.uniform(0.01, 10.0, M)
            n_star = r.uniform(0.01, 10.0)
            # keep every ratio away from the threshold
            while np.any(np.abs(X / X.max() - gamma) < 1e-6):
                X = r.uniform(0.01, 10.0, M)
            q = X / (X + n_star)
            got = select_auto_n(q, gamma).p > 0
            want = X > gamma * X.max()
            mismatches += int(not np.array_equal(got, want))
            draws += 1
    ok = mismatches == 0
    report(2, ok, f"{mismatches} mismatches in {draws} draws over gamma in {{0.1, 0.5, 0.9}}")
    assert ok


# 3 -------------------------------------------------------------------------

def test_criterion_3_mvdr():
    r = np.random.default_rng(3)
    worst_gain = 0.0
    worst_excess = -np.inf
    for _ in range(1000):
        M = int(r.integers(2, 7))
        phi = _hpsd(r, M)
        c = r.standard_normal(M) + 1j * r.standard_normal(M)
        w = mvdr_weights(phi, c)
        worst_gain = max(worst_gain, abs(np.vdot(w, c) - 1))
        p_w = np.real(np.vdot(w, phi @ w))
        v = r.standard_normal((10_000, M)) + 1j * r.standard_normal((10_000, M))
        v = v / np.einsum("km,m->k", v.conj(), c).conj()[:, None]
        p_v = np.real(np.einsum("km,mn,kn->k", v.conj(), phi, v))
        worst_excess = max(worst_excess, (p_w - p_v.min()) / p_w)
    # noise-free rank-1 scene through the full STFT / MVDR / iSTFT chain
    s = r.standard_normal(16000)
    gains = np.array([1.0, -0.6, 0.3, 0.8])
    y = gains[:, None] * s
    out, ref, _ = enhance(y, np.full((4, 61, 257), 0.5), np.ones(4), [0.2, 0.9, 0.4, 0.6])
    inner = slice(512, 16000 - 512)
    target = y[ref, inner]
    rel = np.linalg.norm(out[inner] - target) / np.linalg.norm(target)
    ok = worst_gain <= 1e-8 and worst_excess <= 1e-9 and rel <= 1e-6
    report(3, ok, f"max |w^H c - 1| = {worst_gain:.1e}; worst relative excess over random "
                  f"unit-response combiners = {worst_excess:.1e} (must be <= 0); "
                  f"rank-1 recovery error {rel:.1e}")
    assert ok


# 4 -------------------------------------------------------------------------

def test_criterion_4_synchronization():
    cfg = ExperimentConfig(n_mics=8, noise_kind="diffuse", snrato_db=[10.0])
    scene_cfg = cfg.scene_config(10.0)
    hits = total = 0
    for i in range(100):
        scene = make_scene(scene_cfg, scene_seed(4, 0, i))
        q = oracle_weights(scene)
        res = synchronize(scene.observed(), q)
        arr = scene.arrival_samples
        truth = arr - arr[res.reference_index]
        others = np.arange(8) != res.reference_index
        hits += int(np.sum(np.abs(res.delays - truth)[others] <= 2))
        total += int(others.sum())
    frac = hits / total
    # pure shifts, noise-free: exact
    r = np.random.default_rng(4)
    exact = trials = 0
    for _ in range(50):
        s = r.standard_normal(16000)
        shifts = r.integers(0, 8001, size=8)
        x = np.zeros((8, 24000))
        for m, d in enumerate(shifts):
            x[m, d:d + 16000] = s
        q = r.random(8)
        res = synchronize(x, q)
        ref = int(np.argmax(q))
        exact += int(np.sum(res.delays == shifts - shifts[ref]))
        trials += 8
    ok = frac >= 0.90 and exact == trials
    report(4, ok, f"{frac:.1%} of {total} channels within +-2 samples on 100 scenes; "
                  f"pure-shift exact {exact}/{trials}")
    assert ok


# 5 -------------------------------------------------------------------------

def test_criterion_5_end_to_end_ordering():
    t0 = time.perf_counter()
    details, ok = [], True
    for k, (kind, snr) in enumerate((("diffuse", 10.0), ("point", -5.0))):
        cfg = ExperimentConfig(master_seed=50 + k, n_scenes=50, n_mics=16, noise_kind=kind,
                               snrato_db=[snr], algorithms=["autoN", "all", "1best", "random"],
                               sync_modes=["none", "ground_truth", "estimated"])
        res = run_experiment(cfg, write=False)
        mean = {(s["sync_mode"], s["algorithm"]): s["mean_si_sdr_db"] for s in res.summary}
        est, gt = mean["estimated", "autoN"], mean["ground_truth", "autoN"]
        nosync = mean["none", "all"]
        best1, rand1 = mean["estimated", "1best"], mean["estimated", "random"]
        cond = est > nosync and abs(est - gt) <= 1.0 and best1 > rand1 and res.n_failed == 0
        ok &= cond
        details.append(f"{kind} {snr:+g} dB: autoN+est {est:.2f}, autoN+GT {gt:.2f}, "
                       f"all+none {nosync:.2f}, 1best {best1:.2f}, random {rand1:.2f}")
    sec = time.perf_counter() - t0
    ok &= sec < 600
    report(5, ok, "; ".join(details) + f"; {sec:.0f} s")
    assert ok


# 6 -------------------------------------------------------------------------

def test_criterion_6_unit_suites():
    r = np.random.default_rng(6)
    x = r.standard_normal(16000)
    y = istft(stft(TimeSignal(x))).samples
    rt = np.max(np.abs(y[256:-256] - x[256:-256]))

    shift_ok = all(gcc_phat(np.concatenate([np.zeros(d), x[:16000 - d]]), x, 4000)
                   .delay_samples == d for d in (0, 1, 37, 160, 3999))

    a = r.standard_normal((50, 20)) + 1j * r.standard_normal((50, 20))
    b = r.standard_normal((50, 20)) + 1j * r.standard_normal((50, 20))
    m = irm_array(a, b, b)
    one = np.ones((1, 1))
    irm_ok = (np.all((m >= 0) & (m <= 1))
              and irm_array(one, 0.5 * one, 0.5 * one)[0, 0] == 0.5
              and irm_array(one, 0 * one, 0 * one)[0, 0] == 1.0
              and irm_array(3 * one, one, 0 * one)[0, 0] == 0.75)

    Y = r.standard_normal((3, 7, 4)) + 1j * r.standard_normal((3, 7, 4))
    W = r.random((7, 4))
    phi, _ = weighted_covariance(Y, W)
    naive = np.zeros_like(phi)
    for f in range(4):
        for t in range(7):
            for i in range(3):
                for j in range(3):
                    naive[f, i, j] += W[t, f] * Y[i, t, f] * np.conj(Y[j, t, f])
        naive[f] /= W[:, f].sum()
    cov_err = np.max(np.abs(phi - naive))

    model = MlpModel.init([4, 6, 5, 2], r)
    xs, ys = r.standard_normal((6, 4)), r.random((6, 2))
    _, grads = loss_and_grads(model, xs, ys)
    eps, grad_err = 1e-6, 0.0
    for p, g in zip(model.params(), grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            lp, _ = loss_and_grads(model, xs, ys)
            p[idx] = old - eps
            lm, _ = loss_and_grads(model, xs, ys)
            p[idx] = old
            grad_err = max(grad_err, abs((lp - lm) / (2 * eps) - g[idx]))

    ok = rt < 1e-6 and shift_ok and irm_ok and cov_err < 1e-12 and grad_err < 1e-4
    report(6, ok, f"STFT round trip {rt:.1e}, GCC-PHAT shifts exact={shift_ok}, IRM ok={irm_ok}, "
                  f"covariance vs loops {cov_err:.1e}, MLP gradient {grad_err:.1e}")
    assert ok


# 7 -------------------------------------------------------------------------

def test_criterion_7_gamma_sweep():
    gammas = (0.1, 0.3, 0.5, 0.7, 0.9)
    cfg = ExperimentConfig(master_seed=7, n_scenes=20, n_mics=16, snrato_db=[10.0])
    agg, per = run_gamma_sweep(cfg, gammas, write=False)
    mono = {}
    for alg in ("autoN", "softN", "learningN"):
        counts = [r["mean_n_selected"] for r in agg if r["algorithm"] == alg]
        mono[alg] = all(a >= b for a, b in zip(counts, counts[1:]))
    supports = {(r["scene"], r["gamma"], r["algorithm"]): r["support"] for r in per}
    same = all(supports[s, g, "autoN"] == supports[s, g, "softN"]
               for s in range(cfg.n_scenes) for g in gammas)
    counts = [r["mean_n_selected"] for r in agg if r["algorithm"] == "autoN"]
    ok = all(mono.values()) and same
    report(7, ok, f"auto-N mean count over gamma {[round(c, 2) for c in counts]}; "
                  f"nonincreasing {mono}; soft/auto supports identical on every scene: {same}")
    assert ok


# 8 -------------------------------------------------------------------------

def test_criterion_8_determinism(tmp_path):
    from adhoc_beam.cli import main
    base = ["experiment", "--seed", "8", "--n-scenes", "4", "--n-mics", "6",
            "--algorithms", "1best", "autoN", "softN", "learningN", "random",
            "--sync-modes", "none", "estimated"]
    texts = []
    for k, jobs in enumerate((1, 2, 2)):
        out = tmp_path / f"run{k}"
        assert main(base + ["--jobs", str(jobs), "--out-dir", str(out)]) == 0
        texts.append((out / "results.csv").read_bytes())
    ok = texts[0] == texts[1] == texts[2]
    n_rows = len(texts[0].splitlines()) - 1
    report(8, ok, f"serial and two parallel runs byte-identical: {ok} "
                  f"({len(texts[0])} bytes, {n_rows} rows)")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
