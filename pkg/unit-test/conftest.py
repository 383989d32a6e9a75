import copy

import numpy as np
import pytest

import mixflowpy
from mixflowpy.thermo import build_frame
from mixflowpy.types import MixtureSpec


MINIMAL_SCENARIO = {
    "mixture": {"vbar": [1.0, 2.0]},
    "grid": {"n_cells": 16, "length": 1.0},
    "time": {"dt": 1e-3, "t_final": 3e-3},
    "initial": {
        "varrho": {"kind": "cosine", "base": 0.75, "amplitude": 0.05, "mode": 1}
    },
    "output": {"cadence": 1}
}


def pytest_addoption(parser):
    parser.addoption(
        "--seed", action="store", default=20240601, type=int, help="Seed of the randomized property tests"
    )


@pytest.fixture
def seed(request):
    return request.config.getoption("--seed")


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)


@pytest.fixture
def binary():
    """ V̄ = (1, 2), thresholds 1/2 and 1 """
    spec = MixtureSpec((1.0, 2.0))
    return spec, build_frame(spec.vbar)


@pytest.fixture
def ternary():
    spec = MixtureSpec((1.0, 2.0, 4.0))
    return spec, build_frame(spec.vbar)


@pytest.fixture
def quaternary():
    spec = MixtureSpec((1.0, 1.5, 2.5, 4.0))
    return spec, build_frame(spec.vbar)


@pytest.fixture(params=["binary", "ternary", "quaternary"])
def mixture(request):
    """ Every fixture mixture once """
    return request.getfixturevalue(request.param)


@pytest.fixture
def scenario():
    """ Returns a fresh copy of a small valid binary scenario document """
    def factory(**sections):
        document = copy.deepcopy(MINIMAL_SCENARIO)
        document.update(copy.deepcopy(sections))
        return document
    return factory


@pytest.fixture
def run_config(scenario, tmp_path):
    def factory(**sections):
        document = scenario(**sections)
        document.setdefault("output", {})["directory"] = str(tmp_path / "out")
        return mixflowpy.RunConfig.from_dict(document)
    return factory
