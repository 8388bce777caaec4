#!/usr/bin/env python3
"""Per-epoch wall time versus tree count at fixed depth.

The per-epoch cost has a structure-independent part (autoencoder and fully
connected layers) plus a forest part proportional to n_tree * n_leaves, so
once the forest dominates, doubling the tree count should roughly double
the epoch time. Prints one row per tree count and the K=10/K=5 ratio.
"""

import argparse

from spamforest.numerics import Rng
from spamforest.training import TrainConfig, measure_epoch_seconds


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=1500)
    parser.add_argument("--features", type=int, default=16)
    parser.add_argument("--depth", type=int, default=6)
    parser.add_argument("--epochs", type=int, default=3)
    args = parser.parse_args()

    r = Rng(0)
    X = r.normal((args.rows, args.features))
    y = (X[:, 0] > 0).astype(int)

    times = {}
    for k in (1, 2, 5, 10, 20):
        cfg = TrainConfig(n_tree=k, n_depth=args.depth, batch_size=150,
                          ae_layer_count=1, fc_layer_count=0, seed=1,
                          n_epoch=1)
        times[k] = measure_epoch_seconds(X, y, cfg, n_epochs=args.epochs)
        print(f"n_tree={k:3d}  {times[k] * 1e3:8.1f} ms/epoch")

    print(f"\nK=10 / K=5 per-epoch time ratio: {times[10] / times[5]:.2f} "
          f"(linear scaling predicts ~2 once the forest term dominates)")


if __name__ == "__main__":
    main()
