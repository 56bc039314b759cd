import numpy as np
import pytest

from carriergame import EfficiencyModel, GameConfig, solve_gamma_star

HILL_C = 0.25


def hill(x):
    x = np.asarray(x, dtype=float)
    return x * x / (HILL_C + x * x)


def hill_prime(x):
    x = np.asarray(x, dtype=float)
    return 2.0 * HILL_C * x / (HILL_C + x * x) ** 2


def mixed(x, w=0.05, M=100):
    x = np.asarray(x, dtype=float)
    e = -np.expm1(-x)
    return w * e + (1.0 - w) * e ** M


def mixed_prime(x, w=0.05, M=100):
    x = np.asarray(x, dtype=float)
    e = -np.expm1(-x)
    return np.exp(-x) * (w + (1.0 - w) * M * e ** (M - 1))


@pytest.fixture(scope="session")
def m100():
    return EfficiencyModel.exp_block(100)


@pytest.fixture(scope="session")
def g100(m100):
    return solve_gamma_star(m100).value


@pytest.fixture(scope="session")
def hill_model():
    """x^2 / (1/4 + x^2): sigmoid with f'(0) = 0 and gamma* = 1/2."""
    return EfficiencyModel.custom(hill, hill_prime, 0.0)


@pytest.fixture(scope="session")
def mixed_model():
    """Sigmoid with a positive slope at the origin, f'(0+) = 0.05."""
    return EfficiencyModel.custom(mixed, mixed_prime, 0.05)


@pytest.fixture
def cfg4(m100):
    return GameConfig.from_snr_db(10.0, K=4, model=m100)
