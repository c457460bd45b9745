import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stopval import StoppingProblem  # noqa: E402


def random_stochastic(rng, rows, cols, concentration=1.0):
    return rng.dirichlet(np.full(cols, concentration), size=rows)


def random_problem(rng, m=2, k=None, horizon=None, discount=None, actions=None, outside=None,
                   scale=10.0, infinite=False):
    k = int(rng.integers(2, 4)) if k is None else k
    actions = int(rng.integers(1, 3)) if actions is None else actions
    outside = bool(rng.random() < 0.5) if outside is None else outside
    if infinite:
        horizon = None
        discount = float(rng.uniform(0.5, 0.95)) if discount is None else discount
    else:
        horizon = int(rng.integers(1, 5)) if horizon is None else horizon
        discount = float(rng.uniform(0.6, 1.0)) if discount is None else discount
    return StoppingProblem(
        payoffs=rng.uniform(-scale, scale, size=(actions, m)),
        discount=discount,
        horizon=horizon,
        prior=rng.dirichlet(np.ones(m)),
        info=random_stochastic(rng, m, k),
        include_outside_option=outside,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example2():
    return StoppingProblem([[6, -8]], 0.9, 2, [0.5, 0.5], [[0.7, 0.3], [0.3, 0.7]])


@pytest.fixture
def example5_s():
    return StoppingProblem([[6, -8]], 0.85, 5, [0.5, 0.5], [[0.8, 0.2], [0.5, 0.5]])


@pytest.fixture
def example5_t():
    return StoppingProblem([[6, -8]], 0.85, 5, [0.5, 0.5], [[0.6, 0.4], [0.3, 0.7]])


def example4(p):
    return StoppingProblem([[100, -100]], 0.9, None, [0.57, 0.43], [[p, 1 - p], [1 - p, p]])


def example1(**overrides):
    params = dict(
        payoffs=[[10, -10]], discount=1.0, horizon=2, prior=[0.1, 0.9],
        info=[[0.55, 0.45], [0.45, 0.55]], include_outside_option=True,
        transition=[[0.6, 0.4], [0.4, 0.6]],
    )
    params.update(overrides)
    return StoppingProblem(**params)
