import math

import numpy as np
import pytest

from nlthermo.exceptions import DepthMismatch
from nlthermo.potentials import Potential, PotentialFamily
from nlthermo.pressure import (
    classical_pressure,
    family_gibbs,
    family_pressure,
    gibbs_measure,
    markov_measure,
    measure_entropy,
    measure_integral,
    pressure_gradient,
    transfer_matrix,
)
from nlthermo.sft import SymbolicSystem, word_array

from conftest import random_stochastic

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


def test_zero_potential_full_shift(full2):
    assert classical_pressure(transfer_matrix(full2, [0.0, 0.0])) == pytest.approx(math.log(2), abs=1e-14)


def test_zero_potential_golden_mean(golden):
    assert classical_pressure(transfer_matrix(golden, [0.0, 0.0])) == pytest.approx(math.log(GOLDEN_RATIO), abs=1e-14)


def test_pm1_closed_form(full2, pm1):
    assert family_pressure(pm1, [1.0]) == pytest.approx(math.log(2 * math.cosh(1)), abs=1e-14)


def test_large_potential_does_not_overflow(full2):
    p = classical_pressure(transfer_matrix(full2, [1000.0, 1000.0]))
    assert p == pytest.approx(1000 + math.log(2), abs=1e-10)


def _random_primitive(rng, m):
    while True:
        a = (rng.random((m, m)) < 0.6).astype(int)
        try:
            return SymbolicSystem(a)
        except Exception:
            continue


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_matches_eigenvalue_oracle(rng, m):
    for _ in range(5):
        sys = _random_primitive(rng, m)
        phi = rng.normal(scale=2.0, size=m)
        # column convention here, row convention inside the library: same spectrum
        dense = sys.transition * np.exp(phi)[:, None]
        expected = math.log(max(abs(np.linalg.eigvals(dense))))
        assert classical_pressure(transfer_matrix(sys, phi)) == pytest.approx(expected, abs=1e-10)
        tm = transfer_matrix(sys, phi)
        assert np.allclose(tm.dense(), sys.transition * np.exp(phi)[None, :])


def test_depth_two_matches_word_sums(full2):
    phi = Potential(full2, 2, [0.3, -1.1, 0.7, 0.2])
    fam = PotentialFamily([phi])
    words = word_array(full2, 16)
    sums = lambda w: np.array([phi.values[2 * a + b] for a, b in zip(w[:-1], w[1:])]).sum()  # noqa: E731
    z16 = np.log(np.sum(np.exp([sums(w) for w in words])))
    z15 = np.log(np.sum(np.exp([sums(w) for w in word_array(full2, 15)])))
    assert family_pressure(fam, [1.0]) == pytest.approx(z16 - z15, abs=1e-6)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_gibbs_invariants(rng, m):
    for _ in range(5):
        sys = _random_primitive(rng, m)
        phi = Potential(sys, 1, rng.normal(size=m))
        mu = gibbs_measure(transfer_matrix(sys, phi))
        assert mu.check()
        assert np.all(mu.stochastic[sys.transition == 0] == 0)
        h = measure_entropy(mu)
        integral = measure_integral(mu, phi)[0]
        assert h + integral == pytest.approx(mu.log_pressure, abs=1e-10)


def test_gibbs_of_zero_potential_is_parry(golden):
    mu = gibbs_measure(transfer_matrix(golden, [0.0, 0.0]))
    assert measure_entropy(mu) == pytest.approx(golden.topological_entropy(), abs=1e-12)
    np.testing.assert_allclose(mu.stochastic[0], [1 / GOLDEN_RATIO, 1 / GOLDEN_RATIO**2], atol=1e-12)


def test_full_shift_bernoulli(full2, pm1):
    mu = family_gibbs(pm1, [0.0])
    np.testing.assert_allclose(mu.stochastic, 0.5, atol=1e-14)
    np.testing.assert_allclose(mu.stationary, 0.5, atol=1e-14)


@pytest.mark.parametrize("name", ["full2", "golden", "full3"])
def test_variational_inequality(request, rng, name):
    sys = request.getfixturevalue(name)
    phi = Potential(sys, 1, rng.normal(size=sys.m))
    p = classical_pressure(transfer_matrix(sys, phi))
    for _ in range(50):
        mu = markov_measure(sys, random_stochastic(rng, sys.transition))
        assert measure_entropy(mu) + measure_integral(mu, phi)[0] <= p + 1e-12


def test_pressure_convex_in_q(rng, full3, ind3):
    for _ in range(30):
        a, b = rng.normal(scale=3, size=(2, 2))
        t = rng.random()
        mid = family_pressure(ind3, t * a + (1 - t) * b)
        assert mid <= t * family_pressure(ind3, a) + (1 - t) * family_pressure(ind3, b) + 1e-12


def test_gradient_finite_differences(rng, full3, ind3):
    for _ in range(10):
        q = rng.normal(size=2)
        grad = pressure_gradient(full3, ind3, q)
        fd = []
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1e-6
            fd.append((family_pressure(ind3, q + e) - family_pressure(ind3, q - e)) / 2e-6)
        np.testing.assert_allclose(grad, fd, atol=1e-8)


def test_gradient_on_blocks(rng, golden):
    fam = PotentialFamily([Potential(golden, 2, rng.normal(size=3))])
    g = pressure_gradient(golden, fam, [0.7])[0]
    fd = (family_pressure(fam, [0.7 + 1e-6]) - family_pressure(fam, [0.7 - 1e-6])) / 2e-6
    assert g == pytest.approx(fd, abs=1e-8)


def test_measure_integral_checks_state_space(full2):
    fam = PotentialFamily([Potential(full2, 2, [0, 1, 2, 3])])
    mu = gibbs_measure(transfer_matrix(full2, [0.0, 0.0]))
    with pytest.raises(DepthMismatch):
        measure_integral(mu, fam)


def test_markov_measure_rejects_forbidden(golden):
    with pytest.raises(ValueError):
        markov_measure(golden, [[0.5, 0.5], [0.5, 0.5]])
