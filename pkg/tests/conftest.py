import math

import numpy as np
import pytest

from nlthermo import Potential, PotentialFamily, full_shift, golden_mean_shift, indicator
from nlthermo.spectrum import SpectrumTable

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record():
    def _record(name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())

    return _record


@pytest.fixture(scope="session")
def full2():
    return full_shift(2)


@pytest.fixture(scope="session")
def full3():
    return full_shift(3)


@pytest.fixture(scope="session")
def golden():
    return golden_mean_shift()


@pytest.fixture(scope="session")
def pm1(full2):
    """phi(omega) = omega_0 with the symbols read as -1 and +1."""
    return PotentialFamily([Potential(full2, 1, [-1.0, 1.0])])


@pytest.fixture(scope="session")
def ind2(full2):
    return PotentialFamily([indicator(full2, 0), indicator(full2, 1)])


@pytest.fixture(scope="session")
def ind3(full3):
    return PotentialFamily([indicator(full3, 0), indicator(full3, 2)])


@pytest.fixture(scope="session")
def pm1_table(full2, pm1):
    return SpectrumTable(full2, pm1, 201)


@pytest.fixture(scope="session")
def ind3_table(full3, ind3):
    return SpectrumTable(full3, ind3, 41)


def binary_entropy(p):
    return -sum(x * math.log(x) for x in (p, 1 - p) if x > 0)


def pm1_entropy(z):
    """Closed-form entropy spectrum of omega_0 in {-1, +1} on the full 2-shift."""
    return binary_entropy((1 - z) / 2)


def simplex_entropy(z1, z2):
    return -sum(x * math.log(x) for x in (z1, z2, 1 - z1 - z2) if x > 0)


def random_stochastic(rng, transition):
    p = rng.random(transition.shape) * transition
    return p / p.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20201)
