import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from models.measure import MeasureOnUnitInterval
from models.params import ModelParams


@pytest.fixture
def half_atom():
    return MeasureOnUnitInterval.point_mass(0.5)


@pytest.fixture
def model_params(half_atom):
    """The desk-scale model: N=3, K=2, m1=0.5, e=1, both measures at 0.5."""
    return ModelParams(N=3, K=2, m1=0.5, e=1.0, lambda_d=half_atom, lambda_g=half_atom)


@pytest.fixture
def beta_params():
    return ModelParams(
        N=2,
        K=3,
        m1=0.3,
        e=0.7,
        lambda_d=MeasureOnUnitInterval.beta(2.0, 3.0),
        lambda_g=MeasureOnUnitInterval(atoms=((0.4, 0.6),), beta_components=((1.5, 1.0, 0.4),)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def settings(tmp_path):
    """Experiment settings that keep log files inside the test's temporary directory."""
    return {"logging": {"level": "INFO", "dir": str(tmp_path / "logs")}}
