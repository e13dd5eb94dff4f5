"""Environments, the game loop, regret accounting and seeded sweeps."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .game import Game, as_simplex_point, resolve_game
from .info import hard_family
from .learner import (ExpByOpt, ExploreThenCommit, ExoticEtc, FixedPolicy, Learner, Uniform)
from .value import check_mode, loss_profile, rustichini_value_star, standard_value_star

# stream ids for the counter-based generator
LATENT, ACTION, ENV = 0, 1, 2


def stream(seed: int, purpose: int) -> np.random.Generator:
    """Independent Philox stream; draw number t of the stream belongs to round t."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), purpose]))


@dataclass(frozen=True)
class Environment:
    """A stationary latent distribution, or one distribution per round."""

    n: int
    x: np.ndarray | None = None
    sequence: np.ndarray | None = None
    label: str = "stochastic"

    def __post_init__(self):
        if (self.x is None) == (self.sequence is None):
            raise ValueError("environment needs exactly one of x or sequence")
        if self.sequence is not None and len(self.sequence) != self.n:
            raise ValueError(f"oblivious sequence has {len(self.sequence)} rounds, horizon is {self.n}")

    @classmethod
    def stochastic(cls, x, n: int, label: str = "stochastic") -> "Environment":
        return cls(n, x=np.asarray(x, float), label=label)

    @classmethod
    def oblivious(cls, sequence, label: str = "oblivious") -> "Environment":
        seq = np.asarray(sequence, float)
        return cls(len(seq), sequence=seq, label=label)

    @property
    def stationary(self) -> bool:
        return self.x is not None

    def mean(self) -> np.ndarray:
        return self.x if self.stationary else self.sequence.mean(axis=0)

    def at(self, t: int) -> np.ndarray:
        return self.x if self.stationary else self.sequence[t]

    def draw_latent(self, u: np.ndarray) -> np.ndarray:
        """Inverse-cdf outcome for every round from the uniforms u."""
        if self.stationary:
            cdf = np.cumsum(self.x)
            return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(cdf) - 1)
        cdf = np.cumsum(self.sequence, axis=1)
        z = (cdf < (u * cdf[:, -1])[:, None]).sum(axis=1)
        return np.minimum(z, cdf.shape[1] - 1)


@dataclass(frozen=True)
class RunRecord:
    game: str
    learner: str
    env: str
    n: int
    seed: int
    policies: np.ndarray
    actions: np.ndarray
    signals: np.ndarray
    regret_standard: float
    regret_rustichini: float
    wallclock_ms: float

    def regret(self, mode: str) -> float:
        return self.regret_standard if check_mode(mode) == "standard" else self.regret_rustichini


def _sample_action(pi, u):
    cdf = np.cumsum(pi)
    return min(int(np.searchsorted(cdf, u * cdf[-1], side="right")), len(pi) - 1)


def run(game: Game, learner: Learner, env: Environment, seed: int) -> RunRecord:
    n = env.n
    t0 = time.perf_counter()
    learner.start(n)
    z = env.draw_latent(stream(seed, LATENT).random(n))
    ua = stream(seed, ACTION).random(n)
    policies = np.zeros((n, game.k))
    actions = np.zeros(n, dtype=np.int64)
    feedback = None
    t = 0
    while t < n:
        try:
            pi = learner.step(feedback)
        except Exception as e:
            raise RuntimeError(f"{learner.name} failed in round {t + 1}: {e}") from e
        policies[t] = pi
        actions[t] = _sample_action(pi, ua[t])
        feedback = (int(actions[t]), int(game.signal[actions[t], z[t]]))
        t += 1
        fixed = learner.frozen()
        if fixed is not None and t < n:
            # the rest of the run plays a fixed policy: draw it in one go
            policies[t:] = fixed
            cdf = np.cumsum(fixed)
            actions[t:] = np.minimum(np.searchsorted(cdf, ua[t:] * cdf[-1], side="right"), game.k - 1)
            break
    signals = game.signal[actions, z]
    rs = regret(game, policies, env, "standard")
    rr = regret(game, policies, env, "rustichini")
    ms = (time.perf_counter() - t0) * 1000.0
    return RunRecord(game.name, learner.name, env.label, n, seed, policies, actions, signals, rs, rr, ms)


def regret(game: Game, policies, env: Environment, mode: str) -> float:
    """Sum over rounds of V(pi_t, x_t) minus n times the optimal value at the mean latent law."""
    mode = check_mode(mode)
    policies = np.asarray(policies, float)
    n = len(policies)
    xbar = env.mean()
    if mode == "standard":
        if env.stationary:
            total = float(np.sum(policies @ (game.loss @ env.x)))
        else:
            total = float(np.einsum("tk,kd,td->", policies, game.loss, env.sequence))
        return total - n * standard_value_star(game, xbar)
    if env.stationary:
        M = loss_profile(game, mode, env.x)
        total = float(np.sum(np.max(policies @ M, axis=1)))
    else:
        total = 0.0
        for t in range(n):
            total += float(np.max(policies[t] @ loss_profile(game, mode, env.sequence[t])))
    return total - n * rustichini_value_star(game, xbar)[0]


def sampled_regret(game: Game, record: RunRecord, env: Environment, seed: int) -> float:
    """Standard regret from the realised losses L(a_t, z_t) instead of the policies."""
    z = env.draw_latent(stream(seed, LATENT).random(env.n))
    return float(np.sum(game.loss[record.actions, z]) - env.n * standard_value_star(game, env.mean()))


# ---------------------------------------------------------------------------
# specs that can cross a process boundary
# ---------------------------------------------------------------------------

LEARNERS = ("uniform", "fixed", "exp-by-opt", "etc", "exotic-etc")
ENVS = ("hard", "dirac", "stochastic", "uniform")


def make_learner(game: Game, mode: str, spec: dict) -> Learner:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name == "uniform":
        return Uniform(game.k)
    if name == "fixed":
        return FixedPolicy(as_simplex_point(spec["policy"], game.k, "policy"))
    if name == "exp-by-opt":
        return ExpByOpt(game, mode, lam=spec.get("lambda", 2.0), psi=spec.get("psi"),
                        eta=spec.get("eta"), eps=spec.get("eps"))
    if name == "etc":
        return ExploreThenCommit(game, mode, schedule=spec.get("schedule", "sequential"),
                                 conf=spec.get("conf", 2.0))
    if name == "exotic-etc":
        return ExoticEtc(game)
    raise ValueError(f"unknown learner {name!r}; expected one of {', '.join(LEARNERS)}")


def hard_delta(game: Game, n: int) -> float:
    """Gap scale of the horizon-indexed hard environment."""
    if game.name == "exotic-9x8":
        return n ** (-2 / 7)
    return n ** (-0.5)


def make_env(game: Game, mode: str, spec: dict, n: int, seed: int) -> Environment:
    kind = spec.get("kind")
    if kind == "hard":
        scale = spec.get("scale", 1.0)
        prior = hard_family(game, mode)(scale * hard_delta(game, n))
        # the seed picks which atom of the family the adversary plays
        atom = int(stream(seed, ENV).integers(prior.size))
        return Environment.stochastic(prior.atoms[atom], n, label="hard")
    if kind == "dirac":
        x = np.zeros(game.d)
        x[int(spec.get("index", 0))] = 1.0
        return Environment.stochastic(x, n, label=f"dirac-{int(spec.get('index', 0))}")
    if kind == "stochastic":
        return Environment.stochastic(as_simplex_point(spec["x"], game.d, "env x"), n)
    if kind == "uniform":
        return Environment.stochastic(np.full(game.d, 1.0 / game.d), n, label="uniform")
    raise ValueError(f"unknown env kind {kind!r}; expected one of {', '.join(ENVS)}")


@dataclass(frozen=True)
class Cell:
    game: str
    mode: str
    learner: dict
    env: dict
    n: int
    seed: int


def prepare_learner_spec(game: Game, mode: str, spec: dict) -> dict:
    """Fill in quantities shared by every cell, so workers do not recompute them."""
    spec = dict(spec)
    if spec.get("name") == "exp-by-opt" and spec.get("psi") is None and spec.get("eta") is None:
        from .info import minimax_sweep
        spec["psi"] = minimax_sweep(game, mode, spec.get("lambda", 2.0)).value
    return spec


_GAMES: dict = {}


def _game(ref: str) -> Game:
    # one instance per process keeps the piecewise and vertex caches warm across cells
    if ref not in _GAMES:
        _GAMES[ref] = resolve_game(ref)
    return _GAMES[ref]


def run_cell(cell: Cell) -> dict:
    row = {"game": cell.game, "mode": cell.mode, "learner": cell.learner.get("name"),
           "env": cell.env.get("kind"), "n": cell.n, "seed": cell.seed,
           "regret_standard": math.nan, "regret_rustichini": math.nan, "wallclock_ms": 0.0,
           "status": "ok"}
    try:
        game = _game(cell.game)
        learner = make_learner(game, cell.mode, cell.learner)
        env = make_env(game, cell.mode, cell.env, cell.n, cell.seed)
        rec = run(game, learner, env, cell.seed)
        row.update(regret_standard=rec.regret_standard, regret_rustichini=rec.regret_rustichini,
                   wallclock_ms=rec.wallclock_ms, env=rec.env)
    except Exception as e:  # recorded per cell, the sweep carries on
        row["status"] = f"error: {type(e).__name__}: {e}".replace("\n", " ")
    return row


def worker_count() -> int:
    cap = os.environ.get("PMLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


@dataclass
class SweepTable:
    rows: list = field(default_factory=list)

    def merge(self, other: "SweepTable") -> "SweepTable":
        keyed = {_key(r): r for r in self.rows}
        for r in other.rows:
            keyed.setdefault(_key(r), r)
        return SweepTable(sorted(keyed.values(), key=_key))

    def summary(self, mode: str) -> list:
        """(n, mean regret, stderr, cells) per horizon over successful cells."""
        col = "regret_standard" if check_mode(mode) == "standard" else "regret_rustichini"
        out = []
        for n in sorted({r["n"] for r in self.rows}):
            vals = np.array([r[col] for r in self.rows if r["n"] == n and r["status"] == "ok"])
            if len(vals) == 0:
                continue
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
            out.append((n, float(vals.mean()), se, len(vals)))
        return out


def _key(row):
    return (row["game"], row["mode"], row["learner"], row["env"], row["n"], row["seed"])


def sweep(game: Game | str, mode: str, learner: dict, env: dict, horizons, seeds,
          workers: int | None = None) -> SweepTable:
    game_ref = game if isinstance(game, str) else game.name
    g = _game(game_ref)
    mode = check_mode(mode)
    horizons = sorted(int(n) for n in horizons)
    learner = prepare_learner_spec(g, mode, learner)
    cells = [Cell(game_ref, mode, learner, env, n, int(s)) for n in horizons for s in seeds]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(cells) == 1:
        rows = [run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    return SweepTable(sorted(rows, key=_key))
