#!/usr/bin/env python3
"""Run a full hyperparameter grid for a neural-linear policy on one
environment and print the best setting plus the sorted sensitivity list.

The recurrent grids have 96 settings, the feedforward grids 576; with the
default 5 trials per setting this is a long run, so records are persisted
and the grid resumes if interrupted.
"""

import argparse
import json
from pathlib import Path

from nsbandits import harness, hyper
from nsbandits.envs import EnvSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("grid", choices=sorted(hyper.NAMED_GRIDS))
    ap.add_argument("env", help="environment name, e.g. flipping_gaussian")
    ap.add_argument("--steps", type=int, default=600)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="results/grid")
    args = ap.parse_args()

    settings = hyper.NAMED_GRIDS[args.grid]()
    out = Path(args.out)
    result = harness.grid_search(settings, EnvSpec(args.env, {}), args.steps,
                                 trials=args.trials, base_seed=args.seed,
                                 out_dir=out, workers=args.workers)
    harness.save_grid_result(result, out / "grid_result.json")
    best = result.best_setting
    print(f"best setting: {json.dumps(harness._spec_to_dict(best), sort_keys=True)}")
    print("sorted mean rewards (high to low):")
    for value in result.sorted_scores():
        print(f"  {value:.4f}")


if __name__ == "__main__":
    main()
