from pathlib import Path

import pytest
import yaml

from importers.config_importer import build_experiment_config, build_model_params, load_config
from models.measure import MeasureOnUnitInterval

PROJECT_CONFIG = Path(__file__).parent.parent / "config" / "config.yaml"


@pytest.fixture
def raw_config():
    with open(PROJECT_CONFIG) as f:
        return yaml.safe_load(f)


def _write(tmp_path, config):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config))
    return path


def test_project_config_loads():
    config = build_experiment_config(load_config(PROJECT_CONFIG))
    assert config.model.N == 3
    assert config.model.lambda_d == MeasureOnUnitInterval.point_mass(0.5)
    assert config.finite_d.D == 100
    assert config.reference_xi.atoms == (((0.5, 0.5), 1.0),)
    assert config.horizon == 1.0


def test_cli_overrides_win(raw_config):
    config = build_experiment_config(raw_config, {"seed": 99, "replicates": 10, "n": 4, "jobs": None})
    assert (config.seed, config.replicates, config.n) == (99, 10, 4)
    assert config.jobs == raw_config["experiment"]["jobs"]


def test_environment_overrides(tmp_path, raw_config, monkeypatch):
    monkeypatch.setenv("GENEALOGY_JOBS", "3")
    monkeypatch.setenv("GENEALOGY_OUTPUT_DIR", str(tmp_path / "results"))
    settings = load_config(_write(tmp_path, raw_config))
    config = build_experiment_config(settings)
    assert config.jobs == 3
    assert config.output_path == str(tmp_path / "results")


def test_missing_file_is_reported(tmp_path):
    with pytest.raises(ValueError, match="not found"):
        load_config(tmp_path / "absent.yaml")


def test_missing_measure_is_reported(raw_config):
    del raw_config["model"]["lambda_g"]
    with pytest.raises(ValueError, match="missing configuration key"):
        build_experiment_config(raw_config)


@pytest.mark.parametrize(
    "changes",
    [
        {"time_grid": [1.0, 0.5]},
        {"replicates": 0},
        {"initial": "1;1"},
        {"process": "finite-d", "finite_d": None},
        {"process": "wright-fisher"},
    ],
)
def test_invalid_experiment_settings(raw_config, changes):
    raw_config["experiment"].update(changes)
    if raw_config["experiment"].get("finite_d") is None:
        raw_config["experiment"].pop("finite_d")
    with pytest.raises(ValueError, match="invalid configuration"):
        build_experiment_config(raw_config)


def test_model_defaults():
    params = build_model_params({"lambda_d": {"atoms": [[1.0, 1.0]]}, "lambda_g": {"beta": [[1, 1, 1]]}})
    assert (params.N, params.K, params.m1, params.e, params.deme_rate_scale) == (1, 1, 1.0, 1.0, 1.0)


def test_initial_states(raw_config):
    raw_config["experiment"]["initial"] = "1;2|3"
    config = build_experiment_config(raw_config)
    assert config.initial_state().to_text() == "1;2|3"
    raw_config["experiment"]["initial"] = "single-deme"
    assert build_experiment_config(raw_config).initial_state(4).deme_count == 1
