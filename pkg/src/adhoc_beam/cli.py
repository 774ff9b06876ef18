"""Command-line entry point: ``adhoc-beam <verb> [options]``."""

import argparse
import json
import logging
import os
import sys

import numpy as np

from .experiment import (GAMMAS, ExperimentConfig, ToyTrainConfig, load_estimators,
                         make_scene, run_experiment, run_gamma_sweep, run_montecarlo,
                         train_toy)
from .pipeline import SYNC_MODES, PipelineConfig, prepare, run_arm
from .selection import ALGORITHMS, default_j, default_n, select
from .spectral import stft_multi

logger = logging.getLogger("adhoc_beam")


def _experiment_config(args):
    d = {}
    if args.config:
        with open(args.config) as f:
            d = json.load(f)
    flags = {"master_seed": args.seed, "n_scenes": args.n_scenes, "n_mics": args.n_mics,
             "noise_kind": args.noise_kind, "noise_type": args.noise_type,
             "snrato_db": args.snrato, "algorithms": args.algorithms,
             "sync_modes": args.sync_modes, "gamma": args.gamma, "N": args.N, "J": args.J,
             "sigma": args.sigma, "estimator": args.estimator, "jobs": args.jobs,
             "out_dir": args.out_dir, "dump": args.dump or None}
    # explicit flags override the JSON file
    d.update({k: v for k, v in flags.items() if v is not None})
    return ExperimentConfig.from_dict(d)


def cmd_simulate(args):
    from .acoustics import SceneConfig, export_scene
    cfg = SceneConfig(n_mics=args.n_mics or 16, noise_kind=args.noise_kind or "diffuse",
                      noise_type=args.noise_type or "babble",
                      snrato_db=(args.snrato or [10.0])[0])
    scene = make_scene(cfg, args.seed or 0)
    out = args.out_dir or "scene"
    export_scene(scene, out)
    print(f"wrote scene with {scene.n_mics} channels to {out}")
    return 0


def cmd_enhance(args):
    from .beamformer import enhance
    from .estimation import MlpMaskEstimator
    from .pipeline import mlp_weights
    from .sync import synchronize
    from .wavio import read_wav, write_wav
    out = args.out_dir or "enhanced"
    os.makedirs(out, exist_ok=True)
    alg = args.algorithm
    est = args.estimator or "oracle"
    pc = PipelineConfig(gamma=args.gamma if args.gamma is not None else 0.5,
                        n=args.N, sigma=args.sigma or 1.0, J=args.J)
    if est.startswith("mlp:"):
        pc.mask_model, pc.weight_model = load_estimators(est[4:])
    if args.scene:
        from .acoustics import load_scene
        scene = load_scene(args.scene)
        prep = prepare(scene, args.sync_mode, pc)
        r = run_arm(prep, alg, pc, rng=args.seed or 0)
        y, fs, q, p, sync = r["output"], scene.fs, prep.q, r["p"], prep.sync
        print(f"SI-SDR {r['si_sdr_db']:.2f} dB, {r['n_selected']} channels selected")
    else:
        if not est.startswith("mlp:"):
            print("enhancing a raw recording needs --estimator mlp:<dir>", file=sys.stderr)
            return 2
        x, fs = read_wav(args.input)
        x = np.atleast_2d(x)
        q = mlp_weights(x, pc)
        sync = synchronize(x, q, int(round(pc.max_lag_s * fs)), fs)
        spectra = stft_multi(sync.aligned, fs, pc.stft)
        m_est = MlpMaskEstimator(pc.mask_model)
        masks = np.stack([m_est.estimate(s).values for s in spectra])
        M = q.size
        sel = select(alg, q, pc.gamma, pc.n or default_n(M), pc.sigma, pc.J or default_j(M),
                     spectra)
        p = sel.p
        y, _, _ = enhance(sync.aligned, masks, p, q, spectra, pc.stft, fs)
    write_wav(os.path.join(out, "enhanced.wav"), y, fs, "FLOAT")
    with open(os.path.join(out, "selection.json"), "w") as f:
        json.dump({"algorithm": alg, "q": np.asarray(q).tolist(),
                   "p": np.asarray(p).tolist()}, f, indent=2)
    with open(os.path.join(out, "sync.json"), "w") as f:
        f.write(sync.to_json())
    return 0


def cmd_experiment(args):
    cfg = _experiment_config(args)
    res = run_experiment(cfg)
    print(f"{len(res.rows)} rows, {res.n_failed}/{res.n_scenes} scenes failed, "
          f"{res.seconds:.1f} s -> {cfg.out_dir}/results.csv")
    return res.exit_code


def cmd_montecarlo(args):
    _, rows, sec = run_montecarlo(args.n_mics or 16, args.trials, args.seed or 0, args.shape,
                                  out_dir=args.out_dir or "montecarlo")
    for r in rows:
        print(f"{r['statistic']:>14}: mean {r['mean_m']:.2f} m, std {r['std_m']:.2f} m, "
              f"P(d > {r['threshold_m']:g} m) = {r['p_greater']:.3f}")
    print(f"{sec:.2f} s")
    return 0


def cmd_gamma_sweep(args):
    cfg = _experiment_config(args)
    agg, _ = run_gamma_sweep(cfg, args.gammas or GAMMAS)
    for r in agg:
        print(f"gamma {r['gamma']:.1f} {r['algorithm']:>9}: "
              f"{r['mean_n_selected']:.2f} ch, {r['mean_si_sdr_db']:.2f} dB")
    return 0


def cmd_train_toy(args):
    cfg = ToyTrainConfig(seed=args.seed or 0, epochs=args.epochs)
    _, _, rep = train_toy(cfg, args.out_dir or "checkpoints")
    print(f"mask held-out MSE {rep['mask_heldout_mse']:.4f}, "
          f"weight held-out MSE {rep['weight_heldout_mse']:.4f}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="adhoc-beam", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir")
        p.add_argument("--jobs", type=int)
        p.add_argument("--config", help="JSON file with ExperimentConfig fields")
        p.add_argument("--n-scenes", type=int)
        p.add_argument("--n-mics", type=int)
        p.add_argument("--noise-kind", choices=["diffuse", "point"])
        p.add_argument("--noise-type", choices=["babble", "factory", "white"])
        p.add_argument("--snrato", type=float, nargs="+")
        p.add_argument("--algorithms", nargs="+", choices=ALGORITHMS + ("random",))
        p.add_argument("--sync-modes", nargs="+", choices=SYNC_MODES)
        p.add_argument("--gamma", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--J", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--estimator", help="oracle or mlp:<checkpoint dir>")
        p.add_argument("--dump", action="store_true", help="write per-scene WAVs and JSON")

    p = sub.add_parser("simulate", help="synthesize one scene")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("enhance", help="select channels and beamform one recording")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scene", help="scene directory written by 'simulate'")
    src.add_argument("--input", help="multichannel WAV (needs an mlp estimator)")
    p.add_argument("--algorithm", default="autoN", choices=ALGORITHMS + ("random",))
    p.add_argument("--sync-mode", default="estimated", choices=SYNC_MODES)
    p.set_defaults(fn=cmd_enhance)

    p = sub.add_parser("experiment", help="run a scene batch through all arms")
    common(p)
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("montecarlo", help="source-to-array distance study")
    common(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--shape", default="square",
                   choices=["square", "rectangle", "circle", "mixed"])
    p.set_defaults(fn=cmd_montecarlo)

    p = sub.add_parser("gamma-sweep", help="selection count vs gamma")
    common(p)
    p.add_argument("--gammas", type=float, nargs="+")
    p.set_defaults(fn=cmd_gamma_sweep)

    p = sub.add_parser("train-toy", help="train small mask / weight networks")
    common(p)
    p.add_argument("--epochs", type=int, default=10)
    p.set_defaults(fn=cmd_train_toy)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
