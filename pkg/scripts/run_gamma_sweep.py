"""Number of selected channels and SI-SDR as a function of the selection threshold gamma."""

import argparse
import os

from adhoc_beam.experiment import ExperimentConfig, run_gamma_sweep

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-scenes", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=os.cpu_count())
    ap.add_argument("--out-dir", default="runs/gamma_sweep")
    a = ap.parse_args()
    cfg = ExperimentConfig(master_seed=a.seed, n_scenes=a.n_scenes, jobs=a.jobs,
                           out_dir=a.out_dir)
    agg, _ = run_gamma_sweep(cfg)
    for r in agg:
        print(f"gamma {r['gamma']:.1f} {r['algorithm']:>9}: "
              f"{r['mean_n_selected']:.2f} ch, {r['mean_si_sdr_db']:.2f} dB")
