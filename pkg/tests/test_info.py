import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmlab.game import Prior, catalog
from pmlab.info import (certificate_bound, exotic_family, exotic_gap_closed_form, info_coefficients,
                        info_gain, kl, lambda_star_estimate, min_ratio, ratio_value, regret_gap,
                        robust_gap)
from pmlab.value import build_piecewise

MP = catalog("matching-pennies-dark")
FULL = catalog("full-info-2x3")
EXO = catalog("exotic-9x8")
CATALOG = ["matching-pennies-dark", "degenerate-4x4", "exotic-9x8", "full-info-2x3", "bandit-2x4",
           "g-alpha(3,0.5)"]


def test_kl_examples():
    assert kl([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert kl([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert kl([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert kl([0.0, 1.0], [0.3, 0.7]) == pytest.approx(-math.log(0.7))


def test_dirac_prior_has_no_information():
    pr = Prior.dirac(np.full(8, 1 / 8))
    assert np.all(info_coefficients(EXO, pr).coeffs == 0)


def test_matching_pennies_reveals_nothing():
    pr = Prior.uniform([[0.9, 0.1], [0.1, 0.9]])
    assert info_gain(MP, [0.5, 0.5], pr) == 0.0


def test_two_atom_full_information_by_hand():
    a, b = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.3, 0.5])
    mix = 0.5 * (a + b)
    # unweighted sum over the support, identical for both actions
    per_action = sum(float(np.sum(mix * np.log(mix / x))) for x in (a, b))
    coeffs = info_coefficients(FULL, Prior.uniform([a, b])).coeffs
    assert np.allclose(coeffs, per_action, rtol=1e-12)


def test_info_gain_is_linear_in_policy():
    pr = exotic_family(0.1)
    rng = np.random.default_rng(0)
    p, q = rng.dirichlet(np.ones(9), 2)
    mid = info_gain(EXO, 0.3 * p + 0.7 * q, pr)
    assert mid == pytest.approx(0.3 * info_gain(EXO, p, pr) + 0.7 * info_gain(EXO, q, pr))


def test_matching_pennies_rustichini_gap():
    pr = Prior.dirac([0.3, 0.7])
    assert regret_gap(MP, "rustichini", [0.8, 0.2], pr) == pytest.approx(0.3)
    assert regret_gap(MP, "rustichini", [0.5, 0.5], pr) == pytest.approx(0.0, abs=1e-9)


def test_ratio_conventions():
    assert ratio_value(0.0, 0.0, 2) == 0.0
    assert ratio_value(0.5, 0.0, 2) == math.inf
    assert ratio_value(0.5, math.inf, 2) == 0.0
    assert ratio_value(0.5, 0.25, 2) == pytest.approx(1.0)


def test_matching_pennies_ratios():
    pr = Prior.uniform([[0.9, 0.1], [0.1, 0.9]])
    assert min_ratio(MP, "rustichini", pr, 2).ratio == 0.0
    assert min_ratio(MP, "standard", pr, 2).ratio == math.inf


def test_min_ratio_rejects_small_lambda():
    with pytest.raises(ValueError):
        min_ratio(FULL, "standard", Prior.dirac([0.2, 0.3, 0.5]), 1.0)


def _random_prior(rng, g, m):
    n = int(rng.integers(1, m + 1))
    centre = rng.dirichlet(np.ones(g.d))
    atoms = [0.5 * centre + 0.5 * rng.dirichlet(np.ones(g.d)) for _ in range(n)]
    return Prior(atoms, rng.dirichlet(np.ones(n)))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from(CATALOG), st.sampled_from([1.5, 2.0, 3.0]))
def test_min_ratio_below_uniform_certificate(seed, name, lam):
    g = catalog(name)
    rng = np.random.default_rng(seed)
    pr = _random_prior(rng, g, build_piecewise(g, "rustichini").m)
    rep = min_ratio(g, "rustichini", pr, lam)
    unif = np.full(g.k, 1 / g.k)
    info = info_gain(g, unif, pr)
    if info > 0:
        bound = certificate_bound(rep.gap_star, regret_gap(g, "rustichini", unif, pr), info, lam)
        assert rep.ratio <= bound + 1e-6


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_min_ratio_beats_random_policies(seed):
    rng = np.random.default_rng(seed)
    pr = _random_prior(rng, FULL, 2)
    rep = min_ratio(FULL, "standard", pr, 2.0)
    for pi in rng.dirichlet(np.ones(2), 50):
        assert rep.ratio <= ratio_value(regret_gap(FULL, "standard", pi, pr), info_gain(FULL, pi, pr), 2.0) + 1e-9


def test_level_curve_is_nondecreasing():
    rep = min_ratio(EXO, "rustichini", exotic_family(0.05), 2.0)
    gs = [g for _, g in rep.trace]
    assert len(gs) >= 2
    assert all(b >= a - 1e-12 for a, b in zip(gs, gs[1:]))


def test_ratio_is_monotone_in_lambda():
    pr = exotic_family(0.1)
    vals = [min_ratio(EXO, "rustichini", pr, lam).ratio for lam in (1.5, 2.0, 2.5, 3.0)]
    # gaps are below one, so raising lambda can only shrink the ratio
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("name,mode", [("bandit-2x4", "standard"), ("full-info-2x3", "standard"),
                                       ("degenerate-4x4", "rustichini")])
def test_lambda_star_is_two_for_minimax_root_n_games(name, mode):
    est = lambda_star_estimate(catalog(name), mode, [1.5, 2.0, 2.5, 3.0])
    assert est.bracket == (1.5, 2.0)
    assert est.estimate == pytest.approx(2.0, abs=0.05)


def test_lambda_star_matching_pennies():
    std = lambda_star_estimate(MP, "standard", [1.5, 2.0])
    assert math.isinf(std.estimate)
    rus = lambda_star_estimate(MP, "rustichini", [1.5, 2.0])
    assert rus.estimate == 1.0


def test_exotic_closed_form_examples():
    x = np.full(8, 1 / 8)
    x[3] += 0.1
    x[1] -= 0.1  # u = 0.2, v = 0
    e = np.eye(9)
    assert exotic_gap_closed_form(e[2], x) == 0.0
    assert exotic_gap_closed_form(e[3], x) == pytest.approx(0.2)
    assert exotic_gap_closed_form(e[4], x) == pytest.approx(0.2)
    assert exotic_gap_closed_form(e[8], x) == pytest.approx(1.0)


def test_robust_gap_examples():
    pr = Prior.dirac([0.3, 0.7])
    # the kindest perturbation moves 0.1 of mass onto the better action
    assert robust_gap(MP, pr, [0.0, 1.0], 0.1) == pytest.approx(0.36)
    assert robust_gap(MP, pr, [0.0, 1.0], 0.1, perturbations=[[0.0, 1.0]]) == pytest.approx(0.4)
