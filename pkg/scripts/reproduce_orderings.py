#!/usr/bin/env python3
"""Reproduce the headline policy orderings at desk scale.

Runs the recurrent and feedforward neural-linear posterior-sampling
policies against tuned UCB baselines on a handful of non-stationary
environments and prints a table of mean final pseudo-regret over the
definitive evaluation seeds.
"""

import argparse

import numpy as np

from nsbandits import agents, harness, hyper
from nsbandits.agents import PolicySpec
from nsbandits.envs import EnvSpec


def tuned_ucb(grid, env_spec, horizon, trials, workers):
    result = harness.grid_search(grid, env_spec, horizon, trials=trials,
                                 base_seed=0, workers=workers)
    return result.best_setting


def linucb_specs(horizon, frequency):
    budget = agents.rotating_variation(horizon, frequency)
    width = agents.default_width(2, horizon, noise_sd=0.05)
    dlin = PolicySpec("dlinucb", {
        "discount": agents.tuned_discount(2, horizon, budget), "width": width,
    })
    swlin = PolicySpec("swlinucb", {
        "window": agents.tuned_window(2, horizon, budget), "width": width,
    })
    return dlin, swlin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", help="directory for trial records (optional)")
    args = ap.parse_args()

    seeds = harness.definitive_seeds(0, args.trials)

    rnl = hyper.default_policy("rnl_ps", contextual=False)
    fnl = hyper.default_policy("fnl_ps", contextual=False)
    rnl_ctx = hyper.default_policy("rnl_ps", contextual=True)

    jobs = []
    for env_name in ("flipping_gaussian", "sinusoidal_bernoulli",
                     "circular_markov_chain"):
        env = EnvSpec(env_name, {})
        ducb = tuned_ucb(hyper.ducb_grid(), env, 600, 3, args.workers)
        swucb = tuned_ucb(hyper.swucb_grid(), env, 600, 3, args.workers)
        jobs.append((env, 600, [rnl, fnl, ducb, swucb]))
    for freq in (1 / 32, 2 / 960):
        env = EnvSpec("rotating_vector", {"frequency": freq})
        dlin, swlin = linucb_specs(960, freq)
        jobs.append((env, 960, [rnl_ctx, dlin, swlin]))

    print(f"{'environment':28s} {'policy':10s} {'mean final regret':>18s}")
    for env, horizon, specs in jobs:
        for spec in specs:
            recs = harness.run_many(env, spec, horizon, seeds,
                                    out_dir=args.out, workers=args.workers)
            regret = np.mean([r.final_regret for r in recs])
            label = env.name + (f" f={env.params.get('frequency'):.4f}"
                                if "frequency" in env.params else "")
            print(f"{label:28s} {spec.name:10s} {regret:18.2f}")


if __name__ == "__main__":
    main()
