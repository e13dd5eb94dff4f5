import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmlab.game import catalog
from pmlab.learner import (ExoticEtc, ExoticEtcConfig, ExpByOpt, ExploreThenCommit, SaddleProblem,
                           barrier_conjugate_divergence, barrier_divergence, bound_audit,
                           domain_vertices, eval_lambda, learning_rate, md_update, per_round_bound)
from pmlab.sim import Environment, run
from pmlab.value import build_piecewise, optimal_policy

from oracles import domain_point, md_update_newton

FULL = catalog("full-info-2x2")
MP = catalog("matching-pennies-dark")
DEG = catalog("degenerate-4x4")
EXO = catalog("exotic-9x8")


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.sampled_from([16, 100, 10**4]),
       st.floats(1e-3, 2.0))
def test_md_update_matches_newton_oracle(seed, m, n, eta):
    rng = np.random.default_rng(seed)
    q = domain_point(rng, m, n)
    g = rng.normal(scale=5.0, size=m)
    p, res = md_update(q, eta, g, n, return_residual=True)
    assert res <= 1e-8
    assert abs(p.sum() - 1) <= 1e-12 and p.min() >= 1 / n - 1e-15
    assert np.abs(p - md_update_newton(q, eta, g, n)).max() <= 1e-7


def test_md_update_zero_loss_is_identity():
    q = np.array([0.2, 0.3, 0.5])
    assert np.allclose(md_update(q, 0.5, np.zeros(3), 100), q, atol=1e-12)


@given(st.floats(-3, 3))
def test_md_update_ignores_constant_shifts(c):
    q = np.array([0.1, 0.6, 0.3])
    g = np.array([0.4, -0.2, 1.0])
    a = md_update(q, 0.7, g, 50)
    b = md_update(q, 0.7, g + c, 50)
    assert np.allclose(a, b, atol=1e-10)


def test_md_update_moves_mass_away_from_loss():
    q = np.full(2, 0.5)
    p = md_update(q, 1.0, np.array([1.0, 0.0]), 100)
    assert p[0] < 0.5 < p[1]


def test_barrier_conjugate_divergence_values():
    q = np.array([0.5, 0.5])
    # one coordinate: r - log(1 + r) with r = q * step
    assert barrier_conjugate_divergence(q, np.array([1.0, 0.0])) == pytest.approx(0.5 - math.log(1.5))
    assert barrier_conjugate_divergence(q, np.array([-2.0, 0.0])) == math.inf
    assert barrier_divergence(q, q) == pytest.approx(0.0)


def test_domain_vertices():
    P = domain_vertices(3, 10)
    assert np.allclose(P.sum(axis=1), 1.0)
    assert np.allclose(np.diag(P), 0.8) and P.min() == pytest.approx(0.1)


def test_learning_rate_formula():
    eta = learning_rate(2, 1000, 2.0, 0.25)
    assert eta == pytest.approx(2 * math.sqrt(2 * math.log(500) / 1000) / 0.5)
    # short horizons keep the log term at one
    assert learning_rate(2, 3, 2.0, 0.25) == pytest.approx(2 * math.sqrt(2 / 3) / 0.5)
    assert math.isfinite(learning_rate(2, 100, 2.0, 0.0))


def _problem(game, mode, n=256, eta=0.1):
    return SaddleProblem(game, mode, build_piecewise(game, mode), n, eta)


@pytest.mark.parametrize("name,mode", [("full-info-2x2", "standard"), ("degenerate-4x4", "rustichini"),
                                       ("bandit-2x4", "standard")])
def test_saddle_gap_is_certified(name, mode):
    g = catalog(name)
    prob = _problem(g, mode)
    q = np.full(prob.m, 1.0 / prob.m)
    sol = prob.solve(q, 1e-3)
    assert sol.lower <= sol.value + 1e-9
    assert sol.gap <= 1e-3
    assert abs(sol.policy.sum() - 1) <= 1e-12
    assert eval_lambda(prob, q, sol.policy, sol.estimator) == pytest.approx(sol.value, abs=1e-9)


def test_matching_pennies_saddle_is_trivial():
    prob = _problem(MP, "rustichini")
    sol = prob.solve(np.ones(1), 1e-4)
    assert abs(sol.value) <= 1e-6
    assert np.allclose(sol.policy, [0.5, 0.5], atol=1e-4)


def test_lower_bound_never_exceeds_optimum():
    prob = _problem(DEG, "rustichini")
    q = np.array([0.3, 0.7])
    sol = prob.solve(q, 1e-4)
    rng = np.random.default_rng(0)
    keys = [(xi, i) for xi in range(len(prob.X)) for i in range(prob.m)]
    for _ in range(20):
        w = rng.dirichlet(np.ones(len(keys)))
        xi = {kk: float(wi) for kk, wi in zip(keys, w)}
        assert prob.lower_bound(q, xi) <= sol.value + 1e-8


def test_exp_by_opt_starts_uniform_and_stops_at_horizon():
    L = ExpByOpt(FULL, "standard", psi=0.25)
    L.start(8)
    assert np.allclose(L.state.q, 1 / L.pv.m)
    pi = L.step(None)
    assert abs(pi.sum() - 1) <= 1e-12
    for _ in range(7):
        pi = L.step((0, 0))
    with pytest.raises(RuntimeError, match="past the horizon"):
        L.step((0, 0))


def test_exp_by_opt_rejects_short_horizon():
    with pytest.raises(ValueError):
        ExpByOpt(FULL, "standard", psi=0.25).start(1)


def test_bound_audit_terms():
    L = ExpByOpt(FULL, "standard", psi=0.25)
    rec = run(FULL, L, Environment.stochastic([0.45, 0.55], 64), 0)
    audit = bound_audit(L, rec.regret_standard)
    st_ = L.state
    assert audit.terms["information"] == pytest.approx(64 * per_round_bound(st_.eta, 2.0, 0.25))
    assert audit.terms["approximation"] == pytest.approx(1.0)
    assert audit.bound == pytest.approx(sum(audit.terms.values()))
    assert not audit.violated
    assert L.kkt_max <= 1e-8


def test_etc_requires_global_observability():
    with pytest.raises(ValueError, match="globally observable"):
        ExploreThenCommit(MP, "rustichini")


@pytest.mark.parametrize("x", [[0.5, 0.1, 0.1, 0.3], [0.1, 0.5, 0.1, 0.3]])
def test_degenerate_etc_commits_to_the_right_side(x):
    L = ExploreThenCommit(DEG, "rustichini")
    assert L.explore == [2, 3]
    run(DEG, L, Environment.stochastic(x, 2000), 0)
    assert np.array_equal(L.committed, optimal_policy(DEG, "rustichini", x))


def test_degenerate_etc_fixed_schedule_commits_on_time():
    L = ExploreThenCommit(DEG, "rustichini", schedule=10)
    rec = run(DEG, L, Environment.stochastic([0.1, 0.5, 0.1, 0.3], 50), 0)
    assert set(rec.actions[:10].tolist()) == {2, 3}
    assert L.committed is not None


def _exotic_point(u, v):
    # u = x4 - x2 and v = x8 - x6 in one-based numbering
    x = np.zeros(8)
    x[3], x[7] = u, v
    rest = (1 - u - v) / 2
    x[4] = x[6] = rest
    return x


def test_exotic_etc_phase_one_commit_with_unit_margin():
    L = ExoticEtc(EXO, ExoticEtcConfig(margin1=1.0, margin2=1.0))
    run(EXO, L, Environment.stochastic(_exotic_point(0.3, 0.3), 2**14), 3)
    assert L.phase == 1
    assert np.array_equal(L.committed, np.eye(9)[0])


def test_exotic_etc_phase_one_commit_with_default_margin():
    L = ExoticEtc(EXO)
    run(EXO, L, Environment.stochastic(_exotic_point(0.0, 0.9), 2**14), 3)
    assert L.phase == 1
    assert np.array_equal(L.committed, np.eye(9)[0])


def test_exotic_etc_without_signal_never_commits_to_one_or_two():
    L = ExoticEtc(EXO)
    rec = run(EXO, L, Environment.stochastic(np.full(8, 1 / 8), 2**12), 0)
    assert L.phase == 2
    assert L.committed[:2].sum() == 0 and L.committed[2:4].sum() == pytest.approx(1.0)
    assert not np.any(np.isin(rec.actions, [0, 1]))
