"""
Experiment drivers: seeded scene batches run through the selection /
synchronization arms, the distance Monte Carlo, gamma sweeps and a toy
estimator training run. Every driver writes CSV plus a JSON manifest.
"""

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .acoustics import (TRAIN_ROOM_RANGES, SceneConfig, export_scene,
                        monte_carlo_distances, sample_test_room, synthesize_scene)
from .estimation import (irm_array, mask_features, mask_model, pool_features,
                         snr_variant_value, weight_model)
from .mlp import MlpModel, TrainConfig, dataset_loss, fit_input_normalization, mlp_train
from .pipeline import SYNC_MODES, PipelineConfig, prepare, run_arm
from .selection import ALGORITHMS
from .sources import NOISE_TYPES, noise_bank, speech_like
from .spectral import stft_multi
from .wavio import write_wav

logger = logging.getLogger(__name__)

EXTRA_ARMS = ("random",)
FAIL_FRACTION = 0.10
RESULT_FIELDS = ("scene", "seed", "snrato_db", "noise_kind", "sync_mode", "algorithm",
                 "si_sdr_db", "snr_variant", "n_selected", "reference", "support",
                 "status", "error")


@dataclass
class ExperimentConfig:
    master_seed: int = 0
    n_scenes: int = 10
    n_mics: int = 16
    noise_kind: str = "diffuse"
    noise_type: str = "babble"
    snrato_db: list = field(default_factory=lambda: [10.0])
    algorithms: list = field(default_factory=lambda: ["1best", "all", "autoN"])
    sync_modes: list = field(default_factory=lambda: ["estimated"])
    gamma: float = 0.5
    N: int | None = None            # default round(sqrt(M))
    J: int | None = None            # default M // 2
    sigma: float = 1.0
    estimator: str = "oracle"       # or "mlp:<checkpoint dir>"
    duration_s: float = 3.0
    array_kind: str = "adhoc"
    jobs: int = 1
    dump: bool = False
    out_dir: str = "results"

    def __post_init__(self):
        if isinstance(self.snrato_db, (int, float)):
            self.snrato_db = [float(self.snrato_db)]
        if isinstance(self.algorithms, str):
            self.algorithms = [self.algorithms]
        if isinstance(self.sync_modes, str):
            self.sync_modes = [self.sync_modes]
        self.check()

    def check(self):
        if self.n_scenes < 1:
            raise ValueError("n_scenes must be >= 1")
        if self.n_mics < 1:
            raise ValueError("n_mics must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS + EXTRA_ARMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}; expected a subset of {ALGORITHMS + EXTRA_ARMS}")
        bad = [s for s in self.sync_modes if s not in SYNC_MODES]
        if bad:
            raise ValueError(f"unknown sync modes {bad}; expected a subset of {SYNC_MODES}")
        if self.noise_kind not in ("diffuse", "point"):
            raise ValueError(f"noise_kind must be diffuse or point, got {self.noise_kind!r}")
        if self.noise_type not in NOISE_TYPES:
            raise ValueError(f"noise_type must be one of {NOISE_TYPES}")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if not (self.estimator == "oracle" or self.estimator.startswith("mlp:")):
            raise ValueError("estimator must be 'oracle' or 'mlp:<checkpoint dir>'")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def scene_config(self, snrato_db):
        return SceneConfig(n_mics=self.n_mics, array_kind=self.array_kind,
                           noise_kind=self.noise_kind, noise_type=self.noise_type,
                           snrato_db=float(snrato_db), duration_s=self.duration_s)

    def pipeline_config(self):
        pc = PipelineConfig(gamma=self.gamma, n=self.N, sigma=self.sigma, J=self.J)
        if self.estimator.startswith("mlp:"):
            pc.mask_model, pc.weight_model = load_estimators(self.estimator[4:])
        return pc


def load_estimators(ckpt_dir):
    return (MlpModel.load(os.path.join(ckpt_dir, "mask_model.json")),
            MlpModel.load(os.path.join(ckpt_dir, "weight_model.json")))


# ---------------------------------------------------------------------------
# scenes

def scene_seed(master_seed, *keys):
    """Integer seed for one scene, derived from the master seed and keys."""
    return int(np.random.SeedSequence([int(master_seed), *map(int, keys)]).generate_state(1)[0])


def make_scene(scene_cfg, seed, room=None):
    """Speech, noise and geometry drawn from one seed."""
    rng = np.random.default_rng(seed)
    n = scene_cfg.n_samples
    speech = speech_like(scene_cfg.duration_s, scene_cfg.fs, rng)
    if scene_cfg.noise_kind == "diffuse":
        bank = noise_bank(scene_cfg.noise_type, (scene_cfg.n_mics + 2) * n, scene_cfg.fs, rng)
    else:
        bank = noise_bank(scene_cfg.noise_type, n, scene_cfg.fs, rng)
    scene = synthesize_scene(speech, bank, scene_cfg, rng, room=room)
    scene.seed = int(seed)
    return scene


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6f}"
    return "" if v is None else str(v)


def _process_scene(job):
    """Worker: one scene, every (sync mode, algorithm) arm. Never raises."""
    cfg, snr, snr_idx, i = job
    seed = scene_seed(cfg.master_seed, snr_idx, i)
    base = {"scene": i, "seed": seed, "snrato_db": float(snr), "noise_kind": cfg.noise_kind}
    rows = []
    try:
        scene = make_scene(cfg.scene_config(snr), seed)
        pc = cfg.pipeline_config()
        for mode in cfg.sync_modes:
            prep = prepare(scene, mode, pc)
            for alg in cfg.algorithms:
                # the random arm has its own stream so it cannot perturb others
                rng = np.random.default_rng(scene_seed(cfg.master_seed, snr_idx, i, 1))
                r = run_arm(prep, alg, pc, rng)
                rows.append({**base, "sync_mode": mode, "algorithm": alg,
                             "si_sdr_db": r["si_sdr_db"], "snr_variant": r["snr_variant"],
                             "n_selected": r["n_selected"], "reference": r["reference"],
                             "support": r["support"], "status": "ok", "error": ""})
                if cfg.dump:
                    _dump_arm(cfg, scene, snr_idx, i, mode, alg, prep, r)
            if cfg.dump:
                d = _scene_dir(cfg, snr_idx, i)
                with open(os.path.join(d, f"sync_{mode}.json"), "w") as f:
                    f.write(prep.sync.to_json(scene.arrival_samples - scene.arrival_samples[
                        prep.sync.reference_index]))
        if cfg.dump:
            export_scene(scene, _scene_dir(cfg, snr_idx, i))
    except Exception as err:    # recorded, the run continues
        logger.warning("scene %d (snr %s) failed: %s", i, snr, err)
        return [{**base, "sync_mode": "", "algorithm": "", "si_sdr_db": None,
                 "snr_variant": None, "n_selected": None, "reference": None,
                 "support": "", "status": "failed", "error": f"{type(err).__name__}: {err}"}]
    return rows


def _scene_dir(cfg, snr_idx, i):
    d = os.path.join(cfg.out_dir, "scenes", f"snr{snr_idx}_scene{i:04d}")
    os.makedirs(d, exist_ok=True)
    return d


def _dump_arm(cfg, scene, snr_idx, i, mode, alg, prep, r):
    d = _scene_dir(cfg, snr_idx, i)
    write_wav(os.path.join(d, f"enhanced_{mode}_{alg}.wav"), r["output"], scene.fs, "FLOAT")
    with open(os.path.join(d, f"selection_{mode}_{alg}.json"), "w") as f:
        json.dump({"algorithm": alg, "q": prep.q.tolist(), "p": r["p"].tolist()}, f)


def _map(fn, jobs, n_jobs):
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        # map yields in submission order whatever the completion order
        return list(ex.map(fn, jobs))


def rows_to_csv(rows, fields):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in fields])
    return buf.getvalue()


def summarize(rows):
    """Mean SI-SDR / SNR variant / selected count per (snr, sync, algorithm)."""
    groups = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        key = (r["snrato_db"], r["sync_mode"], r["algorithm"])
        groups.setdefault(key, []).append(r)
    out = []
    for (snr, mode, alg), rs in groups.items():
        out.append({"snrato_db": snr, "sync_mode": mode, "algorithm": alg,
                    "n_scenes": len(rs),
                    "mean_si_sdr_db": float(np.mean([r["si_sdr_db"] for r in rs])),
                    "mean_snr_variant": float(np.mean([r["snr_variant"] for r in rs])),
                    "mean_n_selected": float(np.mean([r["n_selected"] for r in rs]))})
    return out


SUMMARY_FIELDS = ("snrato_db", "sync_mode", "algorithm", "n_scenes", "mean_si_sdr_db",
                  "mean_snr_variant", "mean_n_selected")


@dataclass
class ExperimentResult:
    rows: list
    summary: list
    n_failed: int
    n_scenes: int
    exit_code: int
    csv_text: str
    seconds: float = 0.0


def run_experiment(cfg, write=True):
    """Run every scene through every (sync mode, algorithm) arm.

    Rows are ordered by (snr, scene, sync mode, algorithm). Failed scenes get
    one ``status=failed`` row; more than 10% failures gives exit code 1.
    """
    t0 = time.perf_counter()
    jobs = [(cfg, snr, k, i) for k, snr in enumerate(cfg.snrato_db)
            for i in range(cfg.n_scenes)]
    per_scene = _map(_process_scene, jobs, cfg.jobs)
    rows = [r for rs in per_scene for r in rs]
    n_failed = sum(1 for rs in per_scene if rs and rs[0]["status"] == "failed")
    exit_code = 1 if n_failed > FAIL_FRACTION * len(jobs) else 0
    text = rows_to_csv(rows, RESULT_FIELDS)
    summary = summarize(rows)
    res = ExperimentResult(rows, summary, n_failed, len(jobs), exit_code, text,
                           time.perf_counter() - t0)
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "results.csv"), "w") as f:
            f.write(text)
        with open(os.path.join(cfg.out_dir, "summary.csv"), "w") as f:
            f.write(rows_to_csv(summary, SUMMARY_FIELDS))
        with open(os.path.join(cfg.out_dir, "manifest.json"), "w") as f:
            json.dump({"config": asdict(cfg), "n_scenes": len(jobs), "n_failed": n_failed,
                       "exit_code": exit_code}, f, indent=2)
    if exit_code:
        logger.error("%d of %d scenes failed", n_failed, len(jobs))
    return res


# ---------------------------------------------------------------------------
# distance Monte Carlo

STAT_NAMES = ("conventional", "adhoc_average", "adhoc_best")


def run_montecarlo(n_mics=16, n_trials=100_000, seed=0, shape="square", max_distance=20.0,
                   out_dir=None, threshold_m=5.0):
    """Distance study; writes ``montecarlo_stats.csv`` (one block per
    statistic: mean, std, P(d > threshold)), ``montecarlo_cdf.csv`` and the
    per-trial distances in ``montecarlo_trials.csv``."""
    t0 = time.perf_counter()
    *stats, per_trial = monte_carlo_distances(n_mics, n_trials, seed, shape, max_distance)
    elapsed = time.perf_counter() - t0
    rows = [{"statistic": name, "mean_m": s.mean_m, "std_m": s.std_m,
             "p_greater": s.prob_greater(threshold_m), "threshold_m": float(threshold_m),
             "n_trials": n_trials, "n_mics": n_mics}
            for name, s in zip(STAT_NAMES, stats)]
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "montecarlo_stats.csv"), "w") as f:
            f.write(rows_to_csv(rows, tuple(rows[0])))
        cdf = [{"distance_m": float(x), **{n: float(s.cdf_y[k]) for n, s in zip(STAT_NAMES, stats)}}
               for k, x in enumerate(stats[0].cdf_x)]
        with open(os.path.join(out_dir, "montecarlo_cdf.csv"), "w") as f:
            f.write(rows_to_csv(cdf, ("distance_m",) + STAT_NAMES))
        np.savetxt(os.path.join(out_dir, "montecarlo_trials.csv"),
                   np.column_stack([np.arange(len(per_trial)), per_trial]),
                   fmt=["%d", "%.6f", "%.6f", "%.6f"], delimiter=",", comments="",
                   header="trial,d_conventional,d_adhoc_avg,d_adhoc_best")
        with open(os.path.join(out_dir, "manifest.json"), "w") as f:
            json.dump({"n_mics": n_mics, "n_trials": n_trials, "seed": seed, "shape": shape,
                       "max_distance": max_distance, "seconds": elapsed}, f, indent=2)
    return stats, rows, elapsed


# ---------------------------------------------------------------------------
# gamma sweep

GAMMAS = (0.1, 0.3, 0.5, 0.7, 0.9)
SWEEP_FIELDS = ("gamma", "algorithm", "n_scenes", "mean_n_selected", "mean_si_sdr_db")
SWEEP_SCENE_FIELDS = ("scene", "gamma", "algorithm", "n_selected", "si_sdr_db", "support")


def _sweep_scene(job):
    cfg, gammas, algorithms, i = job
    seed = scene_seed(cfg.master_seed, 0, i)
    scene = make_scene(cfg.scene_config(cfg.snrato_db[0]), seed)
    pc = cfg.pipeline_config()
    prep = prepare(scene, cfg.sync_modes[0], pc)
    rows = []
    for g in gammas:
        for alg in algorithms:
            r = run_arm(prep, alg, pc, gamma=g)
            rows.append({"scene": i, "gamma": float(g), "algorithm": alg,
                         "n_selected": r["n_selected"], "si_sdr_db": r["si_sdr_db"],
                         "support": r["support"]})
    return rows


def run_gamma_sweep(cfg, gammas=GAMMAS, algorithms=("autoN", "softN", "learningN"), write=True):
    """Selection count and quality against gamma; scenes are prepared once
    (first configured sync mode, first SNRatO) and reused across gammas."""
    per_scene = _map(_sweep_scene, [(cfg, tuple(gammas), tuple(algorithms), i)
                                    for i in range(cfg.n_scenes)], cfg.jobs)
    rows = [r for rs in per_scene for r in rs]
    agg = []
    for g in gammas:
        for alg in algorithms:
            rs = [r for r in rows if r["gamma"] == float(g) and r["algorithm"] == alg]
            agg.append({"gamma": float(g), "algorithm": alg, "n_scenes": len(rs),
                        "mean_n_selected": float(np.mean([r["n_selected"] for r in rs])),
                        "mean_si_sdr_db": float(np.mean([r["si_sdr_db"] for r in rs]))})
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "gamma_sweep.csv"), "w") as f:
            f.write(rows_to_csv(agg, SWEEP_FIELDS))
        with open(os.path.join(cfg.out_dir, "gamma_sweep_scenes.csv"), "w") as f:
            f.write(rows_to_csv(rows, SWEEP_SCENE_FIELDS))
    return agg, rows


# ---------------------------------------------------------------------------
# toy estimator training

@dataclass
class ToyTrainConfig:
    seed: int = 0
    n_scenes: int = 6
    n_mics: int = 4
    duration_s: float = 2.0
    snrato_db: tuple = (-5.0, 0.0, 5.0, 10.0)
    hidden: int = 64
    context: int = 7
    epochs: int = 10
    weight_epochs: int = 200
    batch_size: int = 256
    frames_per_scene: int = 400


def _toy_data(cfg, pool):
    """Features and targets from training-pool rooms. ``pool`` separates the
    seed streams of training and held-out data."""
    X, Y, pooled, qs = [], [], [], []
    ranges = TRAIN_ROOM_RANGES
    for i in range(cfg.n_scenes):
        seed = scene_seed(cfg.seed, 1000 + pool, i)
        rng = np.random.default_rng(seed)
        snr = cfg.snrato_db[i % len(cfg.snrato_db)]
        kind = ("diffuse", "point")[i % 2]
        ntype = NOISE_TYPES[i % len(NOISE_TYPES)]
        sc = SceneConfig(n_mics=cfg.n_mics, noise_kind=kind, noise_type=ntype,
                         snrato_db=snr, duration_s=cfg.duration_s)
        scene = make_scene(sc, seed, room=sample_test_room(rng, ranges))
        obs = scene.direct + scene.tail + scene.noise
        Yo = stft_multi(obs, scene.fs)
        irm = irm_array(stft_multi(scene.direct, scene.fs), stft_multi(scene.tail, scene.fs),
                        stft_multi(scene.noise, scene.fs))
        for m in range(scene.n_mics):
            mag = np.abs(Yo[m])
            f = mask_features(mag, cfg.context)
            pick = rng.choice(len(f), size=min(cfg.frames_per_scene, len(f)), replace=False)
            X.append(f[pick])
            Y.append(irm[m][pick])
            pooled.append(pool_features(mag, irm[m]).vector())
            qs.append(snr_variant_value(scene.direct[m], scene.noise[m]))
    return np.concatenate(X), np.concatenate(Y), np.array(pooled), np.array(qs)[:, None]


def train_toy(cfg=None, out_dir=None):
    """Train small mask and weight networks on disjoint train / held-out
    synthetic pools; returns losses and saves both checkpoints."""
    cfg = cfg or ToyTrainConfig()
    Xtr, Ytr, Ptr, Qtr = _toy_data(cfg, pool=0)
    Xte, Yte, Pte, Qte = _toy_data(cfg, pool=1)
    mm = mask_model(Ytr.shape[1], cfg.hidden, cfg.context, rng=cfg.seed)
    fit_input_normalization(mm, Xtr)
    untrained = dataset_loss(mm, Xte, Yte)
    mcfg = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, seed=cfg.seed)
    mlp_train(mm, Xtr, Ytr, mcfg)
    wm = weight_model(Ytr.shape[1], cfg.hidden, rng=cfg.seed + 1)
    fit_input_normalization(wm, Ptr)
    w_untrained = dataset_loss(wm, Pte, Qte)
    wcfg = TrainConfig(epochs=cfg.weight_epochs, batch_size=16, seed=cfg.seed)
    mlp_train(wm, Ptr, Qtr, wcfg)
    report = {"mask_train_history": mcfg.history, "weight_train_history": wcfg.history,
              "mask_heldout_mse": dataset_loss(mm, Xte, Yte),
              "mask_heldout_mse_untrained": untrained,
              "weight_heldout_mse": dataset_loss(wm, Pte, Qte),
              "weight_heldout_mse_untrained": w_untrained,
              "config": asdict(cfg)}
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        mm.save(os.path.join(out_dir, "mask_model.json"))
        wm.save(os.path.join(out_dir, "weight_model.json"))
        with open(os.path.join(out_dir, "training.json"), "w") as f:
            json.dump(report, f, indent=2)
    return mm, wm, report
