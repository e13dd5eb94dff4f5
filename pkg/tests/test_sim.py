import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pmlab.game import catalog
from pmlab.learner import FixedPolicy, Uniform
from pmlab.sim import (Environment, SweepTable, make_env, make_learner, regret, run, sampled_regret,
                       stream, sweep, worker_count)
from pmlab.value import optimal_policy

MP = catalog("matching-pennies-dark")
FULL = catalog("full-info-2x3")
DEG = catalog("degenerate-4x4")


def test_streams_are_independent_and_reproducible():
    a = stream(7, 0).random(5)
    assert np.array_equal(a, stream(7, 0).random(5))
    assert not np.array_equal(a, stream(7, 1).random(5))
    assert not np.array_equal(a, stream(8, 0).random(5))


def test_environment_needs_one_source():
    with pytest.raises(ValueError):
        Environment(3)
    with pytest.raises(ValueError, match="horizon"):
        Environment(3, sequence=np.full((2, 2), 0.5))


def test_runs_replay_bit_for_bit():
    env = Environment.stochastic([0.2, 0.5, 0.3], 300)
    a = run(FULL, Uniform(2), env, 11)
    b = run(FULL, Uniform(2), env, 11)
    assert np.array_equal(a.actions, b.actions) and np.array_equal(a.signals, b.signals)
    assert a.regret_standard == b.regret_standard
    c = run(FULL, Uniform(2), env, 12)
    assert not np.array_equal(a.actions, c.actions)


def test_fixed_policy_frequencies():
    pi = np.array([0.1, 0.2, 0.3, 0.4])
    n = 20000
    rec = run(DEG, FixedPolicy(pi), Environment.stochastic(np.full(4, 0.25), n), 3)
    freq = np.bincount(rec.actions, minlength=4) / n
    assert np.all(np.abs(freq - pi) <= 3 * np.sqrt(pi * (1 - pi) / n))


def test_matching_pennies_uniform_regret():
    env = Environment.stochastic([1.0, 0.0], 500)
    rec = run(MP, Uniform(2), env, 0)
    assert rec.regret_rustichini == pytest.approx(0.0, abs=1e-9)
    assert rec.regret_standard == pytest.approx(250.0)


@given(st.floats(0.05, 0.95))
def test_optimal_fixed_policy_has_no_regret(p):
    x = np.array([p, 0.2 * (1 - p), 0.3 * (1 - p), 0.5 * (1 - p)])
    pi = optimal_policy(DEG, "rustichini", x)
    env = Environment.stochastic(x, 10)
    assert regret(DEG, np.tile(pi, (10, 1)), env, "rustichini") == pytest.approx(0.0, abs=1e-8)


def test_constant_oblivious_sequence_matches_stochastic():
    x = np.array([0.2, 0.5, 0.3])
    a = run(FULL, Uniform(2), Environment.stochastic(x, 400), 5)
    b = run(FULL, Uniform(2), Environment.oblivious(np.tile(x, (400, 1))), 5)
    assert np.array_equal(a.signals, b.signals)
    assert a.regret_standard == pytest.approx(b.regret_standard)
    assert a.regret_rustichini == pytest.approx(b.regret_rustichini)


def test_sampled_regret_tracks_policy_regret():
    x = np.array([0.2, 0.5, 0.3])
    n = 5000
    env = Environment.stochastic(x, n)
    vals, pis = [], []
    for seed in range(20):
        rec = run(FULL, Uniform(2), env, seed)
        vals.append(sampled_regret(FULL, rec, env, seed))
        pis.append(rec.regret_standard)
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - np.mean(pis)) <= 3 * se


def test_run_errors_name_the_round():
    class Broken(Uniform):
        def policy(self):
            if self.t == 3:
                raise ValueError("boom")
            return super().policy()

        def frozen(self):
            return None

    with pytest.raises(RuntimeError, match="round 3"):
        run(FULL, Broken(2), Environment.stochastic([0.2, 0.5, 0.3], 10), 0)


def test_make_learner_and_env_reject_unknown_names():
    with pytest.raises(ValueError, match="unknown learner"):
        make_learner(FULL, "standard", {"name": "oracle"})
    with pytest.raises(ValueError, match="unknown env"):
        make_env(FULL, "standard", {"kind": "chaos"}, 10, 0)


def test_hard_environment_depends_on_seed_and_horizon():
    xs = {tuple(make_env(FULL, "standard", {"kind": "hard"}, 1024, s).x) for s in range(8)}
    assert len(xs) == 2
    a = make_env(FULL, "standard", {"kind": "hard"}, 256, 0).x
    b = make_env(FULL, "standard", {"kind": "hard"}, 4096, 0).x
    assert np.abs(a - b).sum() > 0


def _rows(ns, seeds, value):
    return [{"game": "g", "mode": "standard", "learner": "uniform", "env": "dirac-0", "n": n,
             "seed": s, "regret_standard": value, "regret_rustichini": 0.0, "wallclock_ms": 0.0,
             "status": "ok"} for n in ns for s in seeds]


def test_sweep_table_merge_is_associative_and_idempotent():
    A = SweepTable(_rows([8], [0, 1], 1.0))
    B = SweepTable(_rows([8, 16], [1, 2], 2.0))
    C = SweepTable(_rows([16], [0], 3.0))
    left = A.merge(B).merge(C)
    right = A.merge(B.merge(C))
    assert left.rows == right.rows
    assert A.merge(A).rows == A.rows
    assert len(left.rows) == 6


def test_sweep_summary_skips_failed_cells():
    rows = _rows([8], [0, 1, 2], 1.0)
    rows[2]["status"] = "error: x"
    rows[2]["regret_standard"] = math.nan
    (n, mean, se, count), = SweepTable(rows).summary("standard")
    assert (n, mean, count) == (8, 1.0, 2)


def test_sweep_is_deterministic_across_worker_counts():
    args = ("matching-pennies-dark", "standard", {"name": "uniform"}, {"kind": "dirac"}, [16, 32], [0, 1])
    one = sweep(*args, workers=1)
    two = sweep(*args, workers=2)
    strip = lambda t: [{k: v for k, v in r.items() if k != "wallclock_ms"} for r in t.rows]
    assert strip(one) == strip(two)
    assert [s[1] for s in one.summary("standard")] == [8.0, 16.0]


def test_worker_count_respects_cap(monkeypatch):
    monkeypatch.setenv("PMLAB_THREADS", "1")
    assert worker_count() == 1
