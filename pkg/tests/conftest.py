import math

import pytest

from iftem import encoder, signals
from iftem.core import TemParams, time_bounds

# shared experiment point used across module tests (small but realistic)
OMEGA = 2 * math.pi * 60
ENERGY = 0.8
DURATION = 0.13
BIAS = 35.0


@pytest.fixture(scope="session")
def paper_params():
    return TemParams(bias=BIAS, kappa=0.5, delta=0.075)


@pytest.fixture(scope="session")
def test_signal():
    return signals.generate(OMEGA, ENERGY, DURATION, seed=3)


@pytest.fixture(scope="session")
def test_firing(test_signal, paper_params):
    return encoder.encode(test_signal, paper_params)


@pytest.fixture(scope="session")
def test_bounds(test_signal, paper_params):
    return time_bounds(paper_params, test_signal.amplitude_bound)
