import numpy as np
import pytest

from snlevy.model import CompoundPoissonExp, LevyModel


@pytest.fixture
def std_brownian():
    return LevyModel(sigma=1.0)


@pytest.fixture
def linear_brownian():
    return LevyModel(sigma=1.0, gamma=1.0)


@pytest.fixture
def cpexp_model():
    return LevyModel(sigma=1.0, gamma=0.5,
                     jumps=CompoundPoissonExp(rate=2.0, mean_jump=0.7))


@pytest.fixture
def model_zoo(std_brownian, linear_brownian, cpexp_model):
    return [
        std_brownian,
        linear_brownian,
        LevyModel(sigma=1.3, gamma=-0.8),
        cpexp_model,
        LevyModel(sigma=0.6, gamma=-0.4,
                  jumps=CompoundPoissonExp(rate=1.2, mean_jump=1.5)),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
