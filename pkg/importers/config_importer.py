import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from models.experiment_config import ExperimentConfig
from models.measure import MeasureOnUnitInterval, XiMeasure
from models.params import FiniteDConfig, ModelParams

ENV_OVERRIDES = {
    "GENEALOGY_OUTPUT_DIR": ("experiment", "output_path", str),
    "GENEALOGY_JOBS": ("experiment", "jobs", int),
    "GENEALOGY_LOG_DIR": ("logging", "dir", str),
}


def load_config(config_path) -> Dict[str, Any]:
    """Load configuration from YAML file, after the optional config/.env next to it."""
    config_path = Path(config_path)
    load_dotenv(config_path.parent / ".env")
    if not config_path.exists():
        raise ValueError(f"config file not found: {config_path}")
    with open(config_path, "r") as f:
        config = yaml.safe_load(f) or {}

    for variable, (section, key, cast) in ENV_OVERRIDES.items():
        value = os.getenv(variable)
        if value:
            config.setdefault(section, {})[key] = cast(value)
    return config


def build_model_params(section: Dict[str, Any]) -> ModelParams:
    return ModelParams(
        N=section.get("N", 1),
        K=section.get("K", 1),
        m1=section.get("m1", 1.0),
        e=section.get("e", 1.0),
        deme_rate_scale=section.get("deme_rate_scale", 1.0),
        lambda_d=MeasureOnUnitInterval.from_config(section["lambda_d"]),
        lambda_g=MeasureOnUnitInterval.from_config(section["lambda_g"]),
    )


def build_experiment_config(config: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Turn the raw YAML mapping (plus CLI overrides) into a validated ExperimentConfig."""
    try:
        model = build_model_params(config.get("model", {}))
        experiment = dict(config.get("experiment", {}))
        experiment.update({k: v for k, v in (overrides or {}).items() if v is not None})

        finite_d = experiment.pop("finite_d", None)
        if finite_d is not None:
            experiment["finite_d"] = FiniteDConfig(**finite_d)

        reference = config.get("reference", {})
        if "lambda" in reference:
            experiment["reference_lambda"] = MeasureOnUnitInterval.from_config(reference["lambda"])
        if "xi" in reference:
            experiment["reference_xi"] = XiMeasure.from_config(reference["xi"])

        return ExperimentConfig(model=model, **experiment)
    except KeyError as exc:
        raise ValueError(f"missing configuration key: {exc}") from exc
    except ValidationError as exc:
        raise ValueError(f"invalid configuration: {exc}") from exc
