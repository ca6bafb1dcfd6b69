"""Command-line front end.

Subcommands: ``run`` (execute or resume an experiment), ``grid`` (run a
hyperparameter grid), ``defaults`` (pick default settings from grid
results), ``aggregate`` (bootstrap regret summary), ``plot`` (regret-curve
CSV + SVG), ``list-envs``.

Experiments are described by a YAML config file with a strict schema; the
command-line flags override file values. The ``NSBANDITS_RESULTS``
environment variable sets the default output root.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np
import yaml

from . import harness, hyper
from .agents import POLICY_REGISTRY, PolicySpec
from .envs import ENV_REGISTRY, EnvSpec


class ConfigError(Exception):
    pass


_RUN_KEYS = {"env", "policy", "steps", "trials", "seed", "out", "workers"}
_GRID_KEYS = {"env", "grid", "steps", "trials", "seed", "out", "workers"}


def _check_keys(doc: dict, allowed: set, context: str):
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {context}")


def _parse_spec(doc, registry, kind):
    if not isinstance(doc, dict) or "name" not in doc:
        raise ConfigError(f"{kind} must be a mapping with a 'name' key")
    _check_keys(doc, {"name", "params"}, kind)
    name = doc["name"]
    if name not in registry:
        raise ConfigError(f"unknown {kind} name: {name!r}")
    params = doc.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError(f"{kind} params must be a mapping")
    return name, params


def _load_config(path, allowed):
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    _check_keys(doc, allowed, "config")
    return doc


def _apply_overrides(doc, args):
    if args.env is not None:
        doc["env"] = {"name": args.env}
    if getattr(args, "policy", None) is not None:
        doc["policy"] = {"name": args.policy}
    for key, flag in (("steps", "steps"), ("trials", "trials"), ("seed", "seed"),
                      ("out", "out"), ("workers", "workers")):
        value = getattr(args, flag, None)
        if value is not None:
            doc[key] = value
    return doc


def _out_dir(doc, default_name):
    out = doc.get("out")
    if out is None:
        root = os.environ.get("NSBANDITS_RESULTS", "results")
        out = str(Path(root) / default_name)
    return Path(out)


def _env_spec(doc):
    name, params = _parse_spec(doc.get("env", {}), ENV_REGISTRY, "env")
    return EnvSpec(name, params)


def cmd_run(args) -> int:
    doc = _apply_overrides(_load_config(args.config, _RUN_KEYS), args)
    env_spec = _env_spec(doc)
    name, params = _parse_spec(doc.get("policy", {}), POLICY_REGISTRY, "policy")
    policy_spec = PolicySpec(name, params)
    horizon = int(doc.get("steps", 600))
    trials = int(doc.get("trials", 5))
    seed = int(doc.get("seed", 0))
    workers = int(doc.get("workers", 1))
    out = _out_dir(doc, f"{env_spec.name}__{name}")
    harness.write_manifest(out, {
        "kind": "run", "env": harness._spec_to_dict(env_spec),
        "policy": harness._spec_to_dict(policy_spec),
        "horizon": horizon, "trials": trials, "seed": seed,
    })
    seeds = harness.search_seeds(seed, trials)
    records = harness.run_many(env_spec, policy_spec, horizon, seeds, out, workers)
    mean_regret = float(np.mean([r.final_regret for r in records]))
    print(f"{env_spec.name} / {name}: {trials} trials of T={horizon}, "
          f"mean final regret {mean_regret:.2f}")
    print(f"records in {out}")
    return 0


def _grid_settings(doc):
    grid = doc.get("grid")
    if isinstance(grid, str):
        if grid not in hyper.NAMED_GRIDS:
            raise ConfigError(f"unknown grid name: {grid!r} "
                              f"(known: {', '.join(sorted(hyper.NAMED_GRIDS))})")
        return hyper.NAMED_GRIDS[grid]()
    if isinstance(grid, list):
        settings = []
        for entry in grid:
            name, params = _parse_spec(entry, POLICY_REGISTRY, "grid entry")
            settings.append(PolicySpec(name, params))
        return settings
    raise ConfigError("grid must be a named grid or a list of policy settings")


def cmd_grid(args) -> int:
    doc = _apply_overrides(_load_config(args.config, _GRID_KEYS), args)
    env_spec = _env_spec(doc)
    settings = _grid_settings(doc)
    horizon = int(doc.get("steps", 600))
    trials = int(doc.get("trials", 5))
    seed = int(doc.get("seed", 0))
    workers = int(doc.get("workers", 1))
    if args.dry_run:
        print(f"{len(settings)} settings x {trials} trials = "
              f"{len(settings) * trials} trial runs")
        return 0
    out = _out_dir(doc, f"grid__{env_spec.name}")
    result = harness.grid_search(settings, env_spec, horizon, trials=trials,
                                 base_seed=seed, out_dir=out, workers=workers)
    harness.save_grid_result(result, out / "grid_result.json")
    best = result.best_setting
    print(f"best setting ({result.mean_rewards[result.best_index]:.2f} mean reward): "
          f"{json.dumps(harness._spec_to_dict(best), sort_keys=True)}")
    print("sorted mean rewards (high to low):")
    for value in result.sorted_scores():
        print(f"  {value:.4f}")
    return 0


def cmd_defaults(args) -> int:
    results = [harness.load_grid_result(p) for p in args.grid_results]
    index = harness.select_defaults(results)
    setting = results[0].settings[index]
    scores = np.mean([g.normalized_scores for g in results], axis=0)
    print(f"default setting (mean normalized score {scores[index]:.4f}): "
          f"{json.dumps(harness._spec_to_dict(setting), sort_keys=True)}")
    return 0


def _collect_records(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.jsonl")))
        else:
            files.append(p)
    if not files:
        raise ConfigError("no record files found")
    return [harness.load_record(f) for f in files]


def cmd_aggregate(args) -> int:
    records = _collect_records(args.records)
    groups = defaultdict(list)
    for rec in records:
        groups[harness.setting_label(rec.policy)].append(rec)
    for label, recs in sorted(groups.items()):
        curve = harness.aggregate(recs, resamples=args.resamples, seed=args.seed)
        print(f"{label}: {len(recs)} trials, final regret "
              f"{curve.mean[-1]:.2f} [{curve.lower[-1]:.2f}, {curve.upper[-1]:.2f}]")
    return 0


def cmd_plot(args) -> int:
    records = _collect_records(args.records)
    groups = defaultdict(list)
    for rec in records:
        groups[harness.setting_label(rec.policy)].append(rec)
    horizon = records[0].horizon
    curves = {}
    for label, recs in sorted(groups.items()):
        if {r.horizon for r in recs} != {horizon}:
            raise ConfigError("record horizons differ across policies")
        curves[label] = harness.aggregate(recs, resamples=args.resamples,
                                          seed=args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "regret.csv"
    labels = sorted(curves)
    header = ["step"]
    for label in labels:
        header += [f"{label}_mean", f"{label}_lo", f"{label}_hi"]
    lines = [",".join(header)]
    for i in range(horizon - 1):
        row = [str(i + 2)]
        for label in labels:
            c = curves[label]
            row += [repr(float(c.mean[i])), repr(float(c.lower[i])),
                    repr(float(c.upper[i]))]
        lines.append(",".join(row))
    csv_path.write_text("\n".join(lines) + "\n")

    svg_path = out / "regret.svg"
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 4.5))
        steps = np.arange(2, horizon + 1)
        for label in labels:
            c = curves[label]
            line, = ax.plot(steps, c.mean, label=label)
            ax.fill_between(steps, c.lower, c.upper, alpha=0.2,
                            color=line.get_color())
        ax.set_xlabel("time step")
        ax.set_ylabel("cumulative regret")
        ax.legend()
        fig.tight_layout()
        fig.savefig(svg_path)
        plt.close(fig)
    except Exception as exc:  # SVG is best effort; the CSV is the contract
        print(f"SVG rendering failed: {exc}", file=sys.stderr)
    print(f"wrote {csv_path}")
    if svg_path.exists():
        print(f"wrote {svg_path}")
    return 0


def cmd_list_envs(_args) -> int:
    for name in sorted(ENV_REGISTRY):
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsbandits")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_policy=True):
        p.add_argument("config", help="YAML experiment config")
        p.add_argument("--env", help="override environment name")
        if with_policy:
            p.add_argument("--policy", help="override policy name")
        p.add_argument("--steps", type=int, help="trial length T")
        p.add_argument("--trials", type=int, help="number of trials")
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="parallel workers")

    p_run = sub.add_parser("run", help="run or resume an experiment")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_grid = sub.add_parser("grid", help="run a hyperparameter grid")
    common(p_grid, with_policy=False)
    p_grid.add_argument("--dry-run", action="store_true",
                        help="print the setting count and exit")
    p_grid.set_defaults(func=cmd_grid)

    p_def = sub.add_parser("defaults", help="pick defaults from grid results")
    p_def.add_argument("grid_results", nargs="+")
    p_def.set_defaults(func=cmd_defaults)

    p_agg = sub.add_parser("aggregate", help="bootstrap regret summary")
    p_agg.add_argument("records", nargs="+", help="record files or directories")
    p_agg.add_argument("--resamples", type=int, default=1000)
    p_agg.add_argument("--seed", type=int, default=0)
    p_agg.set_defaults(func=cmd_aggregate)

    p_plot = sub.add_parser("plot", help="regret-curve CSV and SVG")
    p_plot.add_argument("records", nargs="+", help="record files or directories")
    p_plot.add_argument("--out", required=True, help="output directory")
    p_plot.add_argument("--resamples", type=int, default=1000)
    p_plot.add_argument("--seed", type=int, default=0)
    p_plot.set_defaults(func=cmd_plot)

    p_list = sub.add_parser("list-envs", help="list environment names")
    p_list.set_defaults(func=cmd_list_envs)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, harness.HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
