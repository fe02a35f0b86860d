import json

import pytest
from pytest_factoryboy import register

from chigrid.config import config_from_dict

from .factories import ExperimentFactory

register(ExperimentFactory)


SMALL_EXPERIMENT = {
    "m": 2,
    "alpha": 1,
    "r": 0,
    "T": 20,
    "eta": 0.1,
    "grid": {"kind": "sparse", "delta0": 1},
    "n_rep": 20,
    "master_seed": 7,
    "eval_points": [[0, 0], [1, 1], [-1, 2]],
    "constants": {"source": "provided", "H_alpha": 1.0},
}


@pytest.fixture
def experiment_data():
    return json.loads(json.dumps(SMALL_EXPERIMENT))


@pytest.fixture
def small_config(experiment_data):
    return config_from_dict(experiment_data)


@pytest.fixture
def config_file(tmp_path, experiment_data):
    def write(**changes):
        data = {**experiment_data, **changes}
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps(data))
        return path

    return write
