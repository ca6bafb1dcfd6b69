import json

import numpy as np
import pytest
import yaml

from nsbandits import cli, harness
from nsbandits.agents import PolicySpec
from nsbandits.envs import EnvSpec


def write_config(path, doc):
    path.write_text(yaml.safe_dump(doc))
    return str(path)


@pytest.fixture
def run_config(tmp_path):
    return write_config(tmp_path / "run.yaml", {
        "env": {"name": "flipping_bernoulli"},
        "policy": {"name": "ducb", "params": {"discount": 0.95}},
        "steps": 30,
        "trials": 2,
        "seed": 0,
        "out": str(tmp_path / "out"),
    })


class TestRun:
    def test_minimal_config_writes_records(self, run_config, tmp_path, capsys):
        assert cli.main(["run", run_config]) == 0
        out = tmp_path / "out"
        assert (out / "manifest.json").exists()
        records = sorted(out.glob("*.jsonl"))
        assert len(records) == 2
        for p in records:
            rec = harness.load_record(p)
            assert rec.horizon == 30
        assert "mean final regret" in capsys.readouterr().out

    def test_rerun_is_a_noop(self, run_config, tmp_path):
        cli.main(["run", run_config])
        out = tmp_path / "out"
        stamps = {p.name: p.stat().st_mtime_ns for p in out.glob("*.jsonl")}
        assert cli.main(["run", run_config]) == 0
        assert {p.name: p.stat().st_mtime_ns for p in out.glob("*.jsonl")} == stamps

    def test_unknown_config_key_is_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bad.yaml", {
            "env": {"name": "flipping_bernoulli"},
            "policy": {"name": "random"},
            "stepz": 10,
        })
        assert cli.main(["run", cfg]) == 1
        assert "stepz" in capsys.readouterr().err

    def test_unknown_policy_name(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bad.yaml", {
            "env": {"name": "flipping_bernoulli"},
            "policy": {"name": "thompson_deluxe"},
        })
        assert cli.main(["run", cfg]) == 1
        assert "thompson_deluxe" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert cli.main(["run", str(tmp_path / "nope.yaml")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_flag_overrides_beat_file_values(self, run_config, tmp_path):
        out2 = tmp_path / "out2"
        assert cli.main(["run", run_config, "--policy", "random",
                         "--steps", "12", "--trials", "1",
                         "--out", str(out2)]) == 0
        records = list(out2.glob("*.jsonl"))
        assert len(records) == 1
        rec = harness.load_record(records[0])
        assert rec.policy.name == "random"
        assert rec.horizon == 12

    def test_results_env_var_sets_default_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NSBANDITS_RESULTS", str(tmp_path / "root"))
        cfg = write_config(tmp_path / "r.yaml", {
            "env": {"name": "flipping_bernoulli"},
            "policy": {"name": "random"},
            "steps": 10,
            "trials": 1,
        })
        assert cli.main(["run", cfg]) == 0
        assert list((tmp_path / "root").glob("*/*.jsonl"))


class TestGrid:
    def grid_config(self, tmp_path, grid):
        return write_config(tmp_path / "grid.yaml", {
            "env": {"name": "flipping_bernoulli"},
            "grid": grid,
            "steps": 25,
            "trials": 2,
            "seed": 0,
            "out": str(tmp_path / "gout"),
        })

    def test_dry_run_prints_count(self, tmp_path, capsys):
        cfg = self.grid_config(tmp_path, "rnl_noncontextual")
        assert cli.main(["grid", cfg, "--dry-run"]) == 0
        assert "96 settings x 2 trials" in capsys.readouterr().out
        assert not (tmp_path / "gout").exists()

    def test_explicit_grid_runs_and_saves_result(self, tmp_path, capsys):
        cfg = self.grid_config(tmp_path, [
            {"name": "ducb", "params": {"discount": 0.9}},
            {"name": "ducb", "params": {"discount": 0.99}},
        ])
        assert cli.main(["grid", cfg]) == 0
        result = harness.load_grid_result(tmp_path / "gout" / "grid_result.json")
        assert len(result.settings) == 2
        assert result.best_index in (0, 1)
        out = capsys.readouterr().out
        assert "best setting" in out and "sorted mean rewards" in out

    def test_unknown_grid_name(self, tmp_path, capsys):
        cfg = self.grid_config(tmp_path, "hugegrid")
        assert cli.main(["grid", cfg, "--dry-run"]) == 1
        assert "hugegrid" in capsys.readouterr().err


class TestDefaults:
    def test_prints_selected_setting(self, tmp_path, capsys):
        settings = [PolicySpec("ducb", {"discount": g}) for g in (0.9, 0.99)]
        paths = []
        for i, rewards in enumerate(([1.0, 3.0], [2.0, 4.0])):
            g = harness.GridResult(
                env=EnvSpec("flipping_bernoulli", {}), settings=settings,
                mean_rewards=np.array(rewards), random_mean=0.0,
                best_index=1, horizon=25, seeds=[0, 1],
            )
            p = tmp_path / f"g{i}.json"
            harness.save_grid_result(g, p)
            paths.append(str(p))
        assert cli.main(["defaults", *paths]) == 0
        out = capsys.readouterr().out
        assert "0.99" in out and "1.0000" in out


@pytest.fixture
def record_dir(tmp_path):
    out = tmp_path / "records"
    out.mkdir()
    env = EnvSpec("flipping_bernoulli", {})
    for spec in (PolicySpec("random"), PolicySpec("ducb", {"discount": 0.95})):
        harness.run_many(env, spec, 20, [0, 1, 2], out_dir=out)
    return out


class TestAggregateAndPlot:
    def test_aggregate_prints_group_summaries(self, record_dir, capsys):
        assert cli.main(["aggregate", str(record_dir)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 2
        for line in out:
            assert "3 trials" in line and "final regret" in line

    def test_plot_csv_matches_aggregate(self, record_dir, tmp_path):
        plot_out = tmp_path / "plots"
        assert cli.main(["plot", str(record_dir), "--out", str(plot_out),
                         "--resamples", "100"]) == 0
        lines = (plot_out / "regret.csv").read_text().strip().splitlines()
        header = lines[0].split(",")
        assert header[0] == "step"
        assert len(header) == 1 + 2 * 3  # two policy groups, three columns each
        assert len(lines) == 1 + 19  # header plus one row per action step
        assert lines[1].split(",")[0] == "2"
        # Mean columns must reproduce the aggregation module exactly.
        for spec in (PolicySpec("random"), PolicySpec("ducb", {"discount": 0.95})):
            label = harness.setting_label(spec)
            col = header.index(f"{label}_mean")
            recs = [harness.load_record(p)
                    for p in sorted(record_dir.glob(f"{label}__s*.jsonl"))]
            curve = harness.aggregate(recs, resamples=100)
            got = np.array([float(line.split(",")[col]) for line in lines[1:]])
            np.testing.assert_array_equal(got, curve.mean)

    def test_plot_svg_written(self, record_dir, tmp_path):
        plot_out = tmp_path / "plots"
        cli.main(["plot", str(record_dir), "--out", str(plot_out),
                  "--resamples", "50"])
        assert (plot_out / "regret.svg").exists()

    def test_empty_directory_rejected(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert cli.main(["aggregate", str(empty)]) == 1
        assert "no record files" in capsys.readouterr().err


class TestListEnvs:
    def test_lists_all_nine(self, capsys):
        assert cli.main(["list-envs"]) == 0
        names = capsys.readouterr().out.split()
        assert len(names) == 9
        assert names == sorted(names)
        assert "circular_markov_chain" in names


def test_console_entry_point_importable():
    from nsbandits.cli import main  # noqa: F401
    assert callable(main)
