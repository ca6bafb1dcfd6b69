"""Trial execution, grid search, default selection, bootstrap aggregation,
and result persistence.

A trial couples one environment instance with one policy instance for a
fixed horizon. The master seed is split into independent environment and
policy streams so that policy randomness never perturbs environment noise
across policy comparisons. Regret is pseudo-regret: the gap between the
oracle's and the chosen arm's exact expected reward, recorded before the
hidden state advances.

Results live in one directory per experiment: a manifest plus one
line-delimited text record per trial, keyed by setting and seed so that
interrupted experiments resume by skipping completed cells.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import EnvInfo, PolicySpec, make_policy
from .envs import EnvSpec, make_env

SCHEMA_VERSION = 1


class HarnessError(Exception):
    pass


@dataclass
class TrialRecord:
    env: EnvSpec
    policy: PolicySpec
    horizon: int
    seed: int
    actions: np.ndarray  # (T-1,)
    rewards: np.ndarray  # (T-1,) realized rewards for steps 2..T
    oracle_best: np.ndarray  # (T-1,) best expected reward before each step
    chosen_expected: np.ndarray  # (T-1,) expected reward of the chosen arm
    duration: float

    @property
    def regret_curve(self) -> np.ndarray:
        return np.cumsum(self.oracle_best - self.chosen_expected)

    @property
    def final_regret(self) -> float:
        return float(np.sum(self.oracle_best - self.chosen_expected))

    @property
    def cumulative_reward(self) -> float:
        return float(np.sum(self.rewards))


def run_trial(env_spec: EnvSpec, policy_spec: PolicySpec, horizon: int, seed: int) -> TrialRecord:
    """Play one full trial; deterministic given the seed."""
    if horizon < 2:
        raise HarnessError("horizon must be at least 2")
    env_ss, policy_ss = np.random.SeedSequence(seed).spawn(2)
    env = make_env(env_spec, np.random.default_rng(env_ss))
    info = EnvInfo(num_arms=env.num_arms, obs_dim=env.obs_dim, arm_dim=env.arm_dim)
    policy = make_policy(policy_spec, info, np.random.default_rng(policy_ss))

    started = time.perf_counter()
    outcome = env.reset()
    policy.start(outcome.reward, outcome.observation)
    n = horizon - 1
    actions = np.empty(n, dtype=int)
    rewards = np.empty(n)
    oracle_best = np.empty(n)
    chosen_expected = np.empty(n)
    for i in range(n):
        action = policy.choose()
        expected = [env.expected_reward(k) for k in range(env.num_arms)]
        oracle_best[i] = max(expected)
        chosen_expected[i] = expected[action]
        actions[i] = action
        outcome = env.step(action)
        rewards[i] = outcome.reward
        policy.observe(outcome.reward, outcome.observation)
    return TrialRecord(
        env=env_spec, policy=policy_spec, horizon=horizon, seed=seed,
        actions=actions, rewards=rewards, oracle_best=oracle_best,
        chosen_expected=chosen_expected, duration=time.perf_counter() - started,
    )


# Persistence -----------------------------------------------------------------


def _spec_to_dict(spec) -> dict:
    def clean(v):
        if isinstance(v, tuple):
            return list(v)
        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, (np.integer, np.floating)):
            return v.item()
        return v

    return {"name": spec.name, "params": {k: clean(v) for k, v in spec.params.items()}}


def setting_label(policy_spec: PolicySpec) -> str:
    """Stable short identifier for one hyperparameter setting."""
    blob = json.dumps(_spec_to_dict(policy_spec), sort_keys=True)
    return f"{policy_spec.name}-{hashlib.sha1(blob.encode()).hexdigest()[:10]}"


def record_path(out_dir: Path, policy_spec: PolicySpec, seed: int) -> Path:
    return Path(out_dir) / f"{setting_label(policy_spec)}__s{seed}.jsonl"


def write_manifest(out_dir: Path, experiment: dict):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "manifest.json"
    if not manifest.exists():
        manifest.write_text(
            json.dumps({"schema_version": SCHEMA_VERSION, "experiment": experiment},
                       sort_keys=True) + "\n"
        )


def save_record(out_dir: Path, record: TrialRecord) -> Path:
    path = record_path(out_dir, record.policy, record.seed)
    header = {
        "schema_version": SCHEMA_VERSION,
        "env": _spec_to_dict(record.env),
        "policy": _spec_to_dict(record.policy),
        "horizon": record.horizon,
        "seed": record.seed,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for i in range(record.horizon - 1):
        lines.append(json.dumps([
            i + 2, int(record.actions[i]), record.rewards[i],
            record.oracle_best[i], record.chosen_expected[i],
        ]))
    footer = {
        "final_reward": record.cumulative_reward,
        "final_regret": record.final_regret,
        "duration": record.duration,
    }
    lines.append(json.dumps(footer, sort_keys=True))
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.rename(path)
    return path


def record_complete(path: Path) -> bool:
    path = Path(path)
    if not path.exists():
        return False
    try:
        load_record(path)
        return True
    except HarnessError:
        return False


def load_record(path: Path) -> TrialRecord:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 3:
        raise HarnessError(f"truncated record: {path}")
    header = json.loads(lines[0])
    if header.get("schema_version") != SCHEMA_VERSION:
        raise HarnessError(
            f"schema version mismatch in {path}: "
            f"{header.get('schema_version')} != {SCHEMA_VERSION}"
        )
    horizon = header["horizon"]
    if len(lines) != 1 + (horizon - 1) + 1:
        raise HarnessError(f"truncated record: {path}")
    steps = [json.loads(line) for line in lines[1:-1]]
    footer = json.loads(lines[-1])
    record = TrialRecord(
        env=EnvSpec(header["env"]["name"], header["env"]["params"]),
        policy=PolicySpec(header["policy"]["name"], header["policy"]["params"]),
        horizon=horizon,
        seed=header["seed"],
        actions=np.array([s[1] for s in steps], dtype=int),
        rewards=np.array([s[2] for s in steps]),
        oracle_best=np.array([s[3] for s in steps]),
        chosen_expected=np.array([s[4] for s in steps]),
        duration=footer["duration"],
    )
    return record


def _run_cell(args):
    env_spec, policy_spec, horizon, seed = args
    return run_trial(env_spec, policy_spec, horizon, seed)


def run_many(env_spec, policy_spec, horizon, seeds, out_dir=None, workers=1):
    """Run (or resume) one trial per seed; returns the records in seed order."""
    records = {}
    pending = []
    for seed in seeds:
        if out_dir is not None:
            path = record_path(out_dir, policy_spec, seed)
            if record_complete(path):
                records[seed] = load_record(path)
                continue
        pending.append(seed)
    if pending:
        args = [(env_spec, policy_spec, horizon, s) for s in pending]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                done = list(pool.map(_run_cell, args))
        else:
            done = [_run_cell(a) for a in args]
        for rec in done:
            if out_dir is not None:
                save_record(out_dir, rec)
            records[rec.seed] = rec
    return [records[s] for s in seeds]


# Grid search and default selection -------------------------------------------


def search_seeds(base_seed: int, trials: int) -> list[int]:
    return [base_seed + i for i in range(trials)]


def definitive_seeds(base_seed: int, trials: int) -> list[int]:
    """Evaluation seeds disjoint from any reasonable search-seed range."""
    return [base_seed + 100_000 + i for i in range(trials)]


@dataclass
class GridResult:
    env: EnvSpec
    settings: list[PolicySpec]
    mean_rewards: np.ndarray  # (n_settings,)
    random_mean: float
    best_index: int
    horizon: int
    seeds: list[int]

    @property
    def best_setting(self) -> PolicySpec:
        return self.settings[self.best_index]

    @property
    def normalized_scores(self) -> np.ndarray:
        best = self.mean_rewards[self.best_index]
        return np.array([
            normalized_score(m, self.random_mean, best) for m in self.mean_rewards
        ])

    def sorted_scores(self) -> np.ndarray:
        """Mean rewards sorted high to low, for sensitivity curves."""
        return np.sort(self.mean_rewards)[::-1]


def normalized_score(m_setting: float, m_random: float, m_best: float) -> float:
    """Rescale a setting's mean reward between the random policy (0) and the
    best setting (1)."""
    if m_best == m_random:
        raise HarnessError("degenerate normalization: best equals random")
    return (m_setting - m_random) / (m_best - m_random)


def grid_search(settings, env_spec, horizon, trials=5, base_seed=0,
                out_dir=None, workers=1) -> GridResult:
    """Evaluate every setting over the same seeded trials; best setting by
    mean cumulative reward, ties to first in grid order. The random policy
    runs alongside to anchor normalized scores."""
    settings = list(settings)
    if not settings:
        raise HarnessError("empty hyperparameter grid")
    seeds = search_seeds(base_seed, trials)
    if out_dir is not None:
        write_manifest(Path(out_dir), {
            "kind": "grid", "env": _spec_to_dict(env_spec),
            "horizon": horizon, "trials": trials, "base_seed": base_seed,
        })
    means = np.empty(len(settings))
    for i, spec in enumerate(settings):
        recs = run_many(env_spec, spec, horizon, seeds, out_dir, workers)
        means[i] = np.mean([r.cumulative_reward for r in recs])
    random_recs = run_many(env_spec, PolicySpec("random"), horizon, seeds,
                           out_dir, workers)
    random_mean = float(np.mean([r.cumulative_reward for r in random_recs]))
    best = int(np.argmax(means))
    return GridResult(env=env_spec, settings=settings, mean_rewards=means,
                      random_mean=random_mean, best_index=best,
                      horizon=horizon, seeds=seeds)


def save_grid_result(result: GridResult, path: Path):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "env": _spec_to_dict(result.env),
        "settings": [_spec_to_dict(s) for s in result.settings],
        "mean_rewards": result.mean_rewards.tolist(),
        "random_mean": result.random_mean,
        "best_index": result.best_index,
        "horizon": result.horizon,
        "seeds": result.seeds,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_grid_result(path: Path) -> GridResult:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise HarnessError(f"schema version mismatch in {path}")
    return GridResult(
        env=EnvSpec(doc["env"]["name"], doc["env"]["params"]),
        settings=[PolicySpec(s["name"], s["params"]) for s in doc["settings"]],
        mean_rewards=np.array(doc["mean_rewards"]),
        random_mean=doc["random_mean"],
        best_index=doc["best_index"],
        horizon=doc["horizon"],
        seeds=doc["seeds"],
    )


def select_defaults(grid_results: list[GridResult]) -> int:
    """Index of the setting with the highest normalized score averaged over
    a group of problems; all grids must share the same setting list."""
    if not grid_results:
        raise HarnessError("no grid results")
    n = len(grid_results[0].settings)
    if any(len(g.settings) != n for g in grid_results):
        raise HarnessError("grid results cover different setting lists")
    scores = np.mean([g.normalized_scores for g in grid_results], axis=0)
    return int(np.argmax(scores))


# Aggregation -----------------------------------------------------------------


@dataclass
class AggregateCurve:
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def aggregate(records: list[TrialRecord], resamples=1000, level=0.95,
              seed=0) -> AggregateCurve:
    """Per-step mean regret with a percentile bootstrap band over trial
    resampling."""
    if len(records) < 2:
        raise HarnessError("aggregation needs at least two trials")
    horizons = {r.horizon for r in records}
    if len(horizons) != 1:
        raise HarnessError("aggregation needs trials of equal horizon")
    curves = np.stack([r.regret_curve for r in records])
    mean = curves.mean(axis=0)
    rng = np.random.default_rng(seed)
    n = len(records)
    idx = rng.integers(n, size=(resamples, n))
    boot = curves[idx].mean(axis=1)  # (resamples, T-1)
    alpha = (1.0 - level) / 2.0
    lower = np.minimum(np.quantile(boot, alpha, axis=0), mean)
    upper = np.maximum(np.quantile(boot, 1.0 - alpha, axis=0), mean)
    return AggregateCurve(mean=mean, lower=lower, upper=upper)
