#!/usr/bin/env python3
"""Sweep the uniform-reweighting weight at a fixed imbalance factor.

Produces results.csv, summary.csv, and sweep_beta.svg showing how All, Known,
Un1, and Un2 respond as beta grows while alpha stays at 0.
"""

import argparse
from pathlib import Path

from ltgcd.config import Hyperparams, SplitSpec
from ltgcd.harness import ExperimentPlan, sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/beta_sweep")
    parser.add_argument("--betas", default="0,1,2,5")
    parser.add_argument("--rho", type=float, default=5.0)
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--epochs", type=int, default=60)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    plan = ExperimentPlan(
        hp=Hyperparams(epochs=args.epochs, alpha=0.0),
        split=SplitSpec(),
        rhos=(args.rho,),
        alphas=(0.0,),
        betas=tuple(float(b) for b in args.betas.split(",")),
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        out_dir=Path(args.out),
        workers=args.workers,
    )
    artifacts = sweep(plan)
    for name, path in artifacts.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
