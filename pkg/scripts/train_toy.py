"""Train the small mask and channel-weight networks on synthetic scenes."""

import argparse

from adhoc_beam.experiment import ToyTrainConfig, train_toy

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-scenes", type=int, default=6)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--out-dir", default="runs/checkpoints")
    a = ap.parse_args()
    _, _, rep = train_toy(ToyTrainConfig(seed=a.seed, n_scenes=a.n_scenes, epochs=a.epochs),
                          a.out_dir)
    for k, v in rep.items():
        if k.endswith("_mse"):
            print(f"{k}: {v:.4f}")
