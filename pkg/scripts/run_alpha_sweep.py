#!/usr/bin/env python3
"""Sweep the prior-alignment weight with the uniform weight held fixed.

Shows the known/unknown accuracy trade-off as alpha grows; run once with
--beta 2 and once with --beta 5 to compare regimes.
"""

import argparse
from pathlib import Path

from ltgcd.config import Hyperparams, SplitSpec
from ltgcd.harness import ExperimentPlan, sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="default results/alpha_sweep_beta<B>")
    parser.add_argument("--alphas", default="0,0.5,1,2")
    parser.add_argument("--beta", type=float, default=2.0)
    parser.add_argument("--rho", type=float, default=5.0)
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--epochs", type=int, default=60)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    out = args.out or f"results/alpha_sweep_beta{args.beta:g}"
    plan = ExperimentPlan(
        hp=Hyperparams(epochs=args.epochs, beta=args.beta),
        split=SplitSpec(),
        rhos=(args.rho,),
        alphas=tuple(float(a) for a in args.alphas.split(",")),
        betas=(args.beta,),
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        out_dir=Path(out),
        workers=args.workers,
    )
    artifacts = sweep(plan)
    for name, path in artifacts.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
