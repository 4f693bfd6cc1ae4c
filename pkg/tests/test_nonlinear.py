import itertools
import math

import numpy as np
import pytest

from nlthermo.config import read_config
from nlthermo.exceptions import BoundaryUnsupported, CapExceeded, OutsideRotationSet
from nlthermo.fexpr import FEvalContext, numeric_hessian, parse, preset
from nlthermo.nonlinear import (
    Objective,
    direct_estimate,
    equilibrium_measure,
    find_maximizers,
    uniqueness_probe,
    variational_value,
)
from nlthermo.potentials import Potential, PotentialFamily
from nlthermo.pressure import family_pressure, measure_entropy, measure_integral
from nlthermo.spectrum import entropy_at

LOG_2COSH1 = math.log(2 * math.cosh(1))


def brute_direct(sys, fam, f, n, params=None):
    """value_n straight from the definition, one word at a time."""
    k = fam.depth
    table = {w: row for w, row in zip(sys.words(k), fam.table())}
    terms = []
    for w in itertools.product(range(sys.m), repeat=n + k - 1):
        if not sys.is_admissible(w):
            continue
        s = sum(np.asarray(table[w[i : i + k]]) for i in range(n))
        terms.append(n * f(s / n, params))
    top = max(terms)
    return (top + math.log(sum(math.exp(t - top) for t in terms))) / n


# -- direct estimate -----------------------------------------------------------


@pytest.mark.parametrize("alpha", [1.0, -1.7])
def test_direct_matches_brute_force(full2, pm1, alpha):
    f, _ = preset("alpha_family")
    est = direct_estimate(full2, pm1, f, 10, {"alpha": alpha})
    for n, v in zip(est.ns, est.values):
        assert v == pytest.approx(brute_direct(full2, pm1, f, n, {"alpha": alpha}), abs=1e-12)


def test_direct_matches_brute_force_depth_two(golden):
    fam = PotentialFamily([Potential(golden, 2, [0.5, -1.0, 2.0]), Potential(golden, 1, [1.0, 0.0])])
    f = parse("z1*z2 - z2^2", 2)
    est = direct_estimate(golden, fam, f, 9)
    for n, v in zip(est.ns, est.values):
        assert v == pytest.approx(brute_direct(golden, fam, f, n), abs=1e-12)


def test_direct_thread_invariance(full3, ind3):
    f, _ = preset("beta_quadratic")
    one = direct_estimate(full3, ind3, f, 9, {"beta": -1.0}, threads=1)
    four = direct_estimate(full3, ind3, f, 9, {"beta": -1.0}, threads=4)
    assert one.values == four.values


def test_direct_linear_is_exact(full2, pm1):
    est = direct_estimate(full2, pm1, parse("z1"), 12)
    np.testing.assert_allclose(est.values, LOG_2COSH1, atol=1e-12)


def test_direct_constant(golden):
    fam = PotentialFamily([Potential(golden, 1, [0.0, 1.0])])
    est = direct_estimate(golden, fam, parse("0.25"), 16)
    # counts grow like the golden ratio, so value_n -> log(golden ratio) + 0.25
    assert est.values[-1] == pytest.approx(math.log((1 + math.sqrt(5)) / 2) + 0.25, abs=0.05)
    assert abs(est.drift) < 0.01


def test_direct_log_base(full2, pm1):
    f, _ = preset("alpha_family")
    two = direct_estimate(full2, pm1, f, 8, {"alpha": 1.0}, log_base=2)
    # value_n in base b is log_b(sum b^(n F)) / n
    scaled = parse("alpha/(z1^2 - 2)*log(2)")
    expected = brute_direct(full2, pm1, scaled, 8, {"alpha": 1.0}) / math.log(2)
    assert two.values[-1] == pytest.approx(expected, abs=1e-12)


def test_direct_cap(full2, pm1, monkeypatch):
    with pytest.raises(CapExceeded):
        direct_estimate(full2, pm1, parse("z1"), 12, cap=1000)
    monkeypatch.setenv("NLP_CAP_WORDS", "100")
    with pytest.raises(CapExceeded):
        direct_estimate(full2, pm1, parse("z1"), 12)


def test_direct_rejects_h(full3, ind3):
    with pytest.raises(ValueError):
        direct_estimate(full3, ind3, preset("neg_h_quartic")[0], 4)


def test_direct_record(full2, pm1):
    est = direct_estimate(full2, pm1, parse("z1"), 4)
    rec = est.as_dict()
    assert [r["n"] for r in rec["series"]] == [2, 3, 4]
    assert "drift" in rec


# -- variational value and maximizers -----------------------------------------


def test_linear_variational(full2, pm1, pm1_table):
    assert variational_value(full2, pm1, parse("z1"), table=pm1_table) == pytest.approx(LOG_2COSH1, abs=1e-9)


def test_alpha_one(full2, pm1, pm1_table):
    f, _ = preset("alpha_family")
    rep = find_maximizers(full2, pm1, f, params={"alpha": 1.0}, table=pm1_table)
    assert rep.count == 1
    assert rep.maximizers[0].z[0] == pytest.approx(0.0, abs=1e-6)
    assert rep.variational_value == pytest.approx(math.log(2) - 0.5, abs=1e-9)
    np.testing.assert_allclose(rep.measures[0].stochastic, 0.5, atol=1e-8)


def test_alpha_minus_one(full2, pm1, pm1_table):
    f, _ = preset("alpha_family")
    rep = find_maximizers(full2, pm1, f, params={"alpha": -1.0}, table=pm1_table)
    assert rep.count == 1


def test_alpha_minus_1_7_two_symmetric(full2, pm1, pm1_table):
    f, _ = preset("alpha_family")
    rep = find_maximizers(full2, pm1, f, params={"alpha": -1.7}, table=pm1_table)
    assert rep.count == 2
    a, b = sorted(m.z[0] for m in rep.maximizers)
    assert a + b == pytest.approx(0.0, abs=1e-6)
    assert b == pytest.approx(0.99759, abs=1e-4)
    assert all(m.interior for m in rep.maximizers)


def test_cinf_base_two(full2, pm1, pm1_table):
    f, _ = preset("cinf_bump")
    rep = find_maximizers(full2, pm1, f, log_base=2, table=pm1_table)
    assert rep.count == 1
    assert rep.maximizers[0].z[0] == pytest.approx(0.75, abs=0.02)
    assert rep.variational_value == pytest.approx(1.33, abs=0.02)


def test_cinf_natural_log_value(full2, pm1, pm1_table):
    # in natural log the bump wins by more: E(0) = log 2 only
    f, _ = preset("cinf_bump")
    rep = find_maximizers(full2, pm1, f, table=pm1_table)
    assert rep.count == 1
    assert rep.variational_value > math.log(2)


def test_variational_dominates_grid(full2, pm1, pm1_table):
    f, _ = preset("alpha_family")
    for alpha in [2.0, -0.5, -1.7, -3.0]:
        obj = Objective(pm1_table, f, {"alpha": alpha})
        assert variational_value(full2, pm1, f, params={"alpha": alpha}, table=pm1_table) >= obj.on_grid().max() - 1e-15


def test_convex_f_lower_bound(full2, pm1, pm1_table):
    # P_F >= h(z) + F(z) at every z; for F = 2 z^2 take z = 1 and z = 0
    f = parse("2*z1^2")
    v = variational_value(full2, pm1, f, table=pm1_table)
    assert v >= 2.0 - 1e-12
    assert v >= math.log(2) - 1e-12


def test_continuum_reported(full3):
    cfg = read_config("full3_neg_h_quartic")
    f, params = cfg.expression()
    rep = find_maximizers(cfg.system, cfg.family, f, params=params, resolution=21)
    assert rep.count == -1
    assert len(rep.tied_locus) >= 21 * 21 // 4 // 4
    assert rep.variational_value == pytest.approx(0.0, abs=1e-9)
    for z in rep.tied_locus:
        assert min(abs(z[0]), abs(z[1])) <= 1e-6


# -- equilibrium measures ------------------------------------------------------


@pytest.mark.parametrize("z", [-0.6, 0.0, 0.3, 0.95])
def test_equilibrium_measure_pm1(full2, pm1, pm1_table, z):
    psi, mu = equilibrium_measure(full2, pm1, [z], table=pm1_table)
    h = entropy_at(full2, pm1, [z]).h
    assert psi.pressure() == pytest.approx(0.0, abs=1e-8)
    assert measure_integral(mu, pm1)[0] == pytest.approx(z, abs=1e-7)
    assert measure_entropy(mu) == pytest.approx(h, abs=1e-8)
    assert mu.check()
    np.testing.assert_allclose(mu.stochastic[:, 1], (1 + z) / 2, atol=1e-9)


def test_equilibrium_measure_triangle(full3, ind3, ind3_table):
    psi, mu = equilibrium_measure(full3, ind3, [0.2, 0.5], table=ind3_table)
    np.testing.assert_allclose(mu.stationary, [0.2, 0.3, 0.5], atol=1e-9)
    assert psi.pressure() == pytest.approx(0.0, abs=1e-8)


def test_equilibrium_measure_segment(full2, ind2):
    psi, mu = equilibrium_measure(full2, ind2, [0.25, 0.75])
    np.testing.assert_allclose(measure_integral(mu, ind2), [0.25, 0.75], atol=1e-9)


def test_equilibrium_measure_errors(full2, pm1, pm1_table):
    with pytest.raises(BoundaryUnsupported):
        equilibrium_measure(full2, pm1, [1.0], table=pm1_table)
    with pytest.raises(OutsideRotationSet):
        equilibrium_measure(full2, pm1, [1.5], table=pm1_table)


# -- uniqueness diagnostics ----------------------------------------------------


def test_uniqueness_probe_concave_alpha(full2, pm1, pm1_table):
    f, _ = preset("alpha_family")
    probe = uniqueness_probe(full2, pm1, f, {"alpha": 1.0}, table=pm1_table)
    assert probe["concave"] and probe["strictly_concave"]
    assert probe["predicts_unique"]


def test_uniqueness_probe_convex_alpha(full2, pm1, pm1_table):
    f, _ = preset("alpha_family")
    probe = uniqueness_probe(full2, pm1, f, {"alpha": -1.7}, table=pm1_table)
    assert not probe["concave"]
    assert not probe["predicts_unique"]


@pytest.mark.parametrize("beta, unique", [(-1.0, True), (-3.7, True), (1.0, False)])
def test_uniqueness_probe_beta(full3, ind3, ind3_table, beta, unique):
    f, _ = preset("beta_quadratic")
    probe = uniqueness_probe(full3, ind3, f, {"beta": beta}, table=ind3_table)
    assert probe["predicts_unique"] is unique
    assert probe["interior_dominates"]


# -- reductions and diagnostics ------------------------------------------------


@pytest.mark.parametrize("a", [1.0, -1.0, 2.5])
def test_linear_combination_reduction(full3, ind3, ind3_table, a):
    # F(z1, z2) = G(z1 - z2) on (1_[1], 1_[3]) equals G on the single potential 1_[1] - 1_[3]
    phi = PotentialFamily([Potential(full3, 1, [1.0, 0.0, -1.0])])
    big = variational_value(full3, ind3, parse("a*(z1 - z2)^2 - 0.3*(z1 - z2)", 2), params={"a": a}, table=ind3_table)
    small = variational_value(full3, phi, parse("a*z1^2 - 0.3*z1"), params={"a": a})
    assert big == pytest.approx(small, abs=1e-6)


def test_cohomology_reduction():
    cfg = read_config("full2_cohomology")
    f, params = cfg.expression()
    v = variational_value(cfg.system, cfg.family, f, params=params)
    reduced = family_pressure(PotentialFamily([cfg.family[0]]), [2 ** (1 / 3)])
    assert v == pytest.approx(reduced, abs=1e-6)


def test_cohomology_reduction_direct_gap_shrinks():
    # word averages of cohomologous potentials differ by O(1/n), so only the trend is checked
    cfg = read_config("full2_cohomology")
    f, params = cfg.expression()
    reduced = family_pressure(PotentialFamily([cfg.family[0]]), [2 ** (1 / 3)])
    est = direct_estimate(cfg.system, cfg.family, f, 14, params)
    gaps = [abs(v - reduced) for v in est.values]
    assert gaps[-1] < gaps[len(gaps) // 2] < gaps[0]


def corrected_det(beta, z1, z2):
    d = z1 * z2 * (1 - z1 - z2)
    return beta**2 - beta * (z1 * (1 - z1) + z2 * (1 - z2)) / d + 1 / d


@pytest.mark.parametrize("beta", [1.0, -1.0, 0.0, 2.0])
def test_hessian_determinant_corrected(full3, ind3, rng, beta):
    e = parse("h + beta*(z1^2 + z2^2)/2", 2)
    for _ in range(10):
        z1, z2 = rng.dirichlet([2, 2, 2])[:2]
        h_func = lambda z: entropy_at(full3, ind3, z).h  # noqa: E731
        hess = numeric_hessian(e, FEvalContext((z1, z2), {"beta": beta}), h_func=h_func)
        assert np.linalg.det(hess) == pytest.approx(corrected_det(beta, z1, z2), rel=1e-3)
