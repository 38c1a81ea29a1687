#!/usr/bin/env python3
"""Tune the six decomposition parameters on the small system.

Draws a maximin Latin hypercube over the parameter box, runs the fixed
point for each sample on shared optimization scenarios, and ranks the
projected strategies on a common validation set.  Desk-scale by default;
raise --lhs-count / --iterations / --budget for a full campaign.
"""
import argparse
from pathlib import Path

import numpy as np

from fleetmaint import appdecomp as ad
from fleetmaint import cli
from fleetmaint import evalharness as ev
from fleetmaint.config import load_config, small_system_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/tune")
    ap.add_argument("--lhs-count", type=int, default=20)
    ap.add_argument("--lhs-restarts", type=int, default=50)
    ap.add_argument("--iterations", type=int, default=20)
    ap.add_argument("--budget", type=int, default=300)
    ap.add_argument("--scenarios", type=int, default=50)
    ap.add_argument("--validation-scenarios", type=int, default=5000)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else small_system_config()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    samples = cli.lhs_sample(ad.PARAM_BOUNDS, args.lhs_count, args.seed,
                             restarts=args.lhs_restarts)
    for p in samples:
        p.iterations = args.iterations
        p.subproblem_budget = args.budget
    noises = ev.generate_scenarios(cfg.n, cfg.T, args.scenarios, args.seed)
    validation = ev.generate_scenarios(cfg.n, cfg.T,
                                       args.validation_scenarios,
                                       args.seed + 1)
    best, board = cli.tune(cfg, samples, noises, validation, seed=args.seed,
                           threads=args.threads)
    cli.leaderboard_to_csv(board, out / "leaderboard.csv")
    cli.save_params(best, out / "best_params.yaml")
    for rec in board[:5]:
        print(f"#{rec['index']:3d}  cost {rec['cost']:12.4f}  "
              f"params {np.round(rec['params'].vector, 4)}")


if __name__ == "__main__":
    main()
