from pathlib import Path

import pandas as pd
import pytest
import yaml

from experiments.converge_d_experiment import ConvergeDExperiment
from experiments.k_sweep_experiment import KSweepExperiment
from experiments.oracle_experiment import OracleExperiment
from experiments.sampling_dist_experiment import SamplingDistExperiment
from experiments.simulate_experiment import SimulateExperiment
from experiments.verify_consistency_experiment import VerifyConsistencyExperiment
from importers.config_importer import build_experiment_config, load_config
from scripts.run_experiments import main

PROJECT_CONFIG = Path(__file__).parent.parent / "config" / "config.yaml"


@pytest.fixture
def small_config(tmp_path):
    def build(model=None, **overrides):
        settings = load_config(PROJECT_CONFIG)
        settings["model"].update(model or {})
        settings["logging"] = {"level": "INFO", "dir": str(tmp_path / "logs")}
        overrides.setdefault("output_path", str(tmp_path / "out"))
        return build_experiment_config(settings, overrides), settings

    return build


@pytest.fixture
def cli_config(tmp_path, monkeypatch):
    monkeypatch.setenv("GENEALOGY_LOG_DIR", str(tmp_path / "logs"))
    with open(PROJECT_CONFIG) as f:
        raw = yaml.safe_load(f)
    raw["experiment"].update({"replicates": 200, "time_grid": [0.5, 1.0], "jobs": 1})
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def _marginals(out_dir):
    [path] = Path(out_dir).glob("*_marginals.csv")
    return pd.read_csv(path)


def test_sampling_dist_checks_pass(small_config):
    config, settings = small_config(n=4, consistency_draws=2, max_total_check_n=5)
    report = SamplingDistExperiment(config, settings).run()
    assert report.all_passed
    assert report.kind_breakdown == {"exact": report.total_checks}
    assert any(name.endswith("_configurations.csv") for name in report.output_files)
    assert any(name.endswith(".meta.json") for name in report.output_files)


def test_verify_consistency_exact_checks_pass(small_config):
    config, settings = small_config(n=2, k_max=3, consistency_draws=2, replicates=200)
    report = VerifyConsistencyExperiment(config, settings).run()
    exact = [c for c in report.comparisons if c.kind == "exact"]
    assert len(exact) == 2 * 2 + 1
    assert all(c.passed for c in exact)
    assert any(c.kind == "total-variation" for c in report.comparisons)


def test_simulate_saves_requested_paths(small_config):
    config, settings = small_config(n=2, replicates=50, saved_paths=3)
    report = SimulateExperiment(config, settings).run()
    [paths_file] = [name for name in report.output_files if name.endswith("_paths.csv")]
    assert set(pd.read_csv(paths_file)["replicate"]) <= {0, 1, 2}


def test_finite_d_needs_enough_demes(small_config):
    config, settings = small_config(process="finite-d", n=3, initial="1|2|3", finite_d={"D": 2, "time_rescale": True})
    with pytest.raises(ValueError, match="smaller than the number of occupied demes"):
        SimulateExperiment(config, settings).run()


def test_single_lineage_run_exits_cleanly(cli_config, tmp_path):
    out = tmp_path / "single"
    assert main(["--config", str(cli_config), "--out", str(out), "--seed", "3", "simulate", "--n", "1"]) == 0
    marginals = _marginals(out)
    assert (marginals["blocks"] == 1).all()
    assert (marginals["frequency"] == 1.0).all()


def test_same_seed_gives_identical_tables(cli_config, tmp_path):
    for run in ("first", "second"):
        main(["--config", str(cli_config), "--out", str(tmp_path / run), "--seed", "11", "simulate", "--n", "3"])
    pd.testing.assert_frame_equal(_marginals(tmp_path / "first"), _marginals(tmp_path / "second"))


def test_invalid_override_exits_with_error(cli_config, tmp_path, capsys):
    assert main(["--config", str(cli_config), "--out", str(tmp_path), "--replicates", "0", "oracle"]) == 1
    assert "Error" in capsys.readouterr().out


def test_missing_config_exits_with_error(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.yaml"), "oracle"]) == 1
    assert "not found" in capsys.readouterr().out


def _table(report, name):
    [path] = [p for p in report.output_files if p.endswith(f"_{name}.csv")]
    return pd.read_csv(path)


def test_oracle_exact_checks_pass(small_config):
    config, settings = small_config(replicates=300)
    report = OracleExperiment(config, settings).run()
    exact = [c for c in report.comparisons if c.kind == "exact"]
    assert len(exact) == 2 * len(config.island_cases) + 2
    assert [c.name for c in exact if not c.passed] == []
    assert sum(c.kind == "chi-square" for c in report.comparisons) == 3 * 2
    island = _table(report, "island")
    assert list(island["N"]) == [N for N, _ in config.island_cases]
    assert (island["p_merge_exact"] - island["p_merge_formula"]).abs().max() < 1e-12


def test_k_sweep_reports_every_k(small_config):
    config, settings = small_config(model={"m1": 0.0}, n=3, k_values=[1, 2], replicates=200)
    report = KSweepExperiment(config, settings).run()
    sweep = _table(report, "k_sweep")
    assert list(sweep["K"]) == [1, 2]
    assert sweep.loc[0, "regime"] == "lambda-coalescent"
    assert (sweep["pair_rate_times_K"] > 0).all()
    assert any(c.name.startswith("pair rate K=1") for c in report.comparisons)
    assert any(c.name.startswith("multiple-merger frequency at K=2") for c in report.comparisons)


def test_converge_d_compares_each_d_with_the_limit(small_config):
    config, settings = small_config(n=2, d_values=[30, 100], replicates=400, time_grid=[0.5])
    report = ConvergeDExperiment(config, settings).run()
    ladder = _table(report, "converge_d")
    assert list(ladder["D"]) == [30, 100]
    assert (ladder["standard_error"] > 0).all()
    assert (ladder["tv"] < ladder["standard_error"] * 4 + 0.05).all()
    assert [c.kind for c in report.comparisons] == ["total-variation", "total-variation"]


@pytest.mark.parametrize(
    "command,table",
    [
        (["oracle"], "transient"),
        (["k-sweep", "--n", "3", "--k-values", "1", "5"], "k_sweep"),
        (["converge-d", "--n", "2", "--d-values", "30", "100"], "converge_d"),
    ],
)
def test_subcommands_write_their_tables(cli_config, tmp_path, capsys, command, table):
    out = tmp_path / "cli"
    status = main(["--config", str(cli_config), "--out", str(out), "--seed", "5", "--replicates", "100"] + command)
    assert status in (0, 1)
    assert list(out.glob(f"*_{table}.csv"))
    assert list(out.glob("*.meta.json"))
    assert "SUMMARY" in capsys.readouterr().out
