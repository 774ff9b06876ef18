"""Monte Carlo source-to-array distance study (conventional vs best ad-hoc mic)."""

import argparse

from adhoc_beam.experiment import run_montecarlo

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--n-mics", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--shape", default="square")
    ap.add_argument("--out-dir", default="runs/distance")
    a = ap.parse_args()
    _, rows, sec = run_montecarlo(a.n_mics, a.trials, a.seed, a.shape, out_dir=a.out_dir)
    for r in rows:
        print(f"{r['statistic']:>14}: mean {r['mean_m']:.2f} m, std {r['std_m']:.2f} m, "
              f"P(d > {r['threshold_m']:g} m) = {r['p_greater']:.3f}")
    print(f"{sec:.2f} s -> {a.out_dir}")
