"""Learners: exploration by optimisation, explore-then-commit and simple baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .game import Game, signal_laws
from .numerics import INF, linprog, solve_monotone_root
from .value import (PiecewiseValue, build_piecewise, cell_complex, check_mode, classify_actions,
                    loss_profile, optimal_policy)

# ---------------------------------------------------------------------------
# log-barrier geometry
# ---------------------------------------------------------------------------


def barrier_conjugate_divergence(q, step) -> np.ndarray:
    """D_*(grad F(q) - step, grad F(q)) for F = -sum log, summed over the last axis.

    With u = -1/q the ratio u'/u equals 1 + q*step, so each coordinate contributes
    q*step - log(1 + q*step); the value is +inf when 1 + q*step <= 0.
    """
    r = np.asarray(q) * np.asarray(step)
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(1.0 + r > 0, r - np.log1p(np.maximum(r, -1.0 + 1e-300)), INF)
    return terms.sum(axis=-1)


def barrier_divergence(p, q) -> np.ndarray:
    """Bregman divergence D(p, q) of F = -sum log q_i."""
    ratio = np.asarray(p) / np.asarray(q)
    return np.sum(ratio - np.log(ratio) - 1.0, axis=-1)


def domain_vertices(m: int, n: int) -> np.ndarray:
    """Vertices of {p in simplex_m : p >= 1/n}."""
    return np.full((m, m), 1.0 / n) + (1.0 - m / n) * np.eye(m)


# ---------------------------------------------------------------------------
# state and the mirror-descent step
# ---------------------------------------------------------------------------


@dataclass
class LearnerState:
    q: np.ndarray
    eta: float
    eps: float
    n: int
    t: int
    pv: PiecewiseValue

    @property
    def m(self) -> int:
        return self.pv.m

    def check_domain(self, tol: float = 1e-10):
        q = self.q
        lo = 1.0 / self.n
        if abs(q.sum() - 1) > tol or q.min() < lo - tol or q.max() > 1 + tol:
            raise AssertionError(f"q left the domain at round {self.t}: {q}")


def md_update(q, eta: float, g, n: int, return_residual: bool = False):
    """argmin over {p in simplex, p >= 1/n} of <p, g> + D(p, q)/eta.

    Stationarity gives p_i = clip(1/(1/q_i + eta*g_i + nu), 1/n, 1) with nu chosen
    so that p sums to one.
    """
    q = np.asarray(q, float)
    g = np.asarray(g, float)
    m = q.size
    lo = 1.0 / n
    base = 1.0 / q + eta * g

    def coords(nu):
        den = base + nu
        with np.errstate(divide="ignore"):
            p = np.where(den > 0, 1.0 / np.where(den > 0, den, 1.0), 1.0)
        return np.clip(p, lo, 1.0)

    if m == 1:
        p = np.ones(1)
        nu = 0.0
    else:
        nu_lo = -base.max()
        nu_hi = n - base.min()
        nu = solve_monotone_root(lambda v: 1.0 - coords(v).sum(), nu_lo, nu_hi, tol=1e-13)
        p = coords(nu)
    if not return_residual:
        return p
    free = (p > lo * (1 + 1e-12)) & (p < 1 - 1e-12)
    res = abs(p.sum() - 1.0)
    if free.any():
        res = max(res, float(np.max(np.abs(p[free] * (base[free] + nu) - 1.0))))
    return p, res


# ---------------------------------------------------------------------------
# the saddle problem of one round
# ---------------------------------------------------------------------------


@dataclass
class SaddleSolution:
    policy: np.ndarray
    gscaled: np.ndarray  # k x |Sigma| x m table of v_hat(a, s) / pi(a)
    value: float  # exact Lambda at (policy, estimator)
    lower: float  # certified lower bound on the optimal Lambda
    support: list  # (x, p, weight) of the adversary mixture
    iterations: int
    converged: bool

    @property
    def gap(self) -> float:
        return self.value - self.lower

    @property
    def estimator(self) -> np.ndarray:
        return self.policy[:, None, None] * self.gscaled


class SaddleProblem:
    """Working data for evaluating and minimising Lambda for one game."""

    def __init__(self, game: Game, mode: str, pv: PiecewiseValue, n: int, eta: float,
                 grid: np.ndarray | None = None, n_random: int = 20, seed: int = 0):
        self.game, self.mode, self.pv, self.n, self.eta = game, check_mode(mode), pv, n, eta
        self.k, self.d, self.m, self.ns = game.k, game.d, pv.m, game.n_symbols
        self.P = domain_vertices(self.m, n)
        self.floor = 1e-6 / self.k
        self.S = game.signal_basis()[1:]
        # z -> one-hot of S(a, z) for every a, shape d x k x ns
        self.onehot = np.zeros((self.d, self.k, self.ns))
        for a in range(self.k):
            self.onehot[np.arange(self.d), a, game.signal[a]] = 1.0
        self.X, self.prof, self.laws, self.vm = [], [], [], []
        if grid is None:
            grid = [np.eye(self.d)]
            if mode == "rustichini":
                for _, P in cell_complex(pv).cells:
                    V = P.vertices()
                    if len(V):
                        grid.append(V)
                grid.append(np.random.default_rng(seed).dirichlet(np.ones(self.d), size=n_random))
            grid = np.vstack(grid)
        for x in grid:
            self.add_point(x)
        self._conic = None

    def add_point(self, x):
        x = np.clip(np.asarray(x, float), 0, None)
        x = x / x.sum()
        if any(np.abs(x - y).max() <= 1e-10 for y in self.X):
            return False
        self.X.append(x)
        self.prof.append(loss_profile(self.game, self.mode, x))
        self.laws.append(signal_laws(self.game, x))
        self.vm.append(self.pv.vector(x))
        return True

    # -- pieces of the objective -------------------------------------------

    def _kappa(self, q, g):
        """kappa[i, a, s] = <p_i - q, g(a,s)> + D_*(eta g(a,s))/eta (finite by construction)."""
        dstar = barrier_conjugate_divergence(q, self.eta * g) / self.eta  # k x ns
        lin = np.einsum("im,asm->ias", self.P - q, g)
        return lin + dstar[None]

    def _rows(self, q, g):
        """Rows (r, c) with Lambda on the grid = max over rows of pi.r + c."""
        kap = self._kappa(q, g)
        R, C, tag = [], [], []
        for xi, (M, law, vm) in enumerate(zip(self.prof, self.laws, self.vm)):
            b = np.einsum("as,ias->ia", law, kap)  # m x k
            c = -(self.P @ vm)  # m
            for i in range(self.m):
                R.append(M.T + b[i][None, :])
                C.append(np.full(M.shape[1], c[i]))
                tag += [(xi, i)] * M.shape[1]
        return np.vstack(R), np.concatenate(C), tag

    def grid_value(self, q, pi, g) -> float:
        R, C, _ = self._rows(q, g)
        return float(np.max(R @ pi + C))

    def exact_value(self, q, pi, g):
        """sup over x in the simplex and p in the domain: (value, maximiser x, p index)."""
        pi = np.asarray(pi, float)
        kap = self._kappa(q, g)
        best = (-INF, None, None)
        for i in range(self.m):
            lin_x = -(self.pv.pieces.T @ self.P[i]) + np.einsum("zas,as->z", self.onehot, pi[:, None] * kap[i])
            if self.mode == "standard":
                vals = pi @ self.game.loss + lin_x
                z = int(np.argmax(vals))
                cand = (float(vals[z]), np.eye(self.d)[z], i)
            else:
                d, r = self.d, self.S.shape[0]
                # variables (x, y): max pi L y + lin_x . x, S y = S x, both in the simplex
                c = np.concatenate([lin_x, pi @ self.game.loss])
                A_eq = np.vstack([
                    np.hstack([-self.S, self.S]) if r else np.zeros((0, 2 * d)),
                    np.concatenate([np.ones(d), np.zeros(d)]),
                    np.concatenate([np.zeros(d), np.ones(d)]),
                ])
                b_eq = np.concatenate([np.zeros(r), [1.0, 1.0]])
                sol = linprog(c, A_eq=A_eq, b_eq=b_eq, maximize=True)
                if not sol.optimal:
                    raise RuntimeError(f"Lambda oracle LP failed: {sol.status}")
                cand = (float(sol.value), sol.x[:d], i)
            if cand[0] > best[0]:
                best = cand
        return best

    # -- learner and adversary steps ---------------------------------------

    def closed_form(self, q, xi):
        """Optimal scaled estimator against the adversary mixture xi and the lower bound it certifies."""
        W = np.zeros((self.k, self.ns))
        Mp = np.zeros((self.k, self.ns, self.m))
        base = 0.0
        for (xi_idx, i), w in xi.items():
            law = self.laws[xi_idx]
            W += w * law
            Mp += w * law[:, :, None] * self.P[i][None, None, :]
            base -= w * (self.P[i] @ self.vm[xi_idx])
        seen = W > 1e-300
        cond = np.where(seen[:, :, None], Mp / np.where(seen, W, 1.0)[:, :, None], q[None, None, :])
        g = np.where(seen[:, :, None], (-1.0 / q + 1.0 / cond) / self.eta, 0.0)
        info = np.sum(W * barrier_divergence(cond, q[None, None, :]), axis=1) / self.eta  # per action
        return g, base, info

    def lower_bound(self, q, xi) -> float:
        """min over policies of the adversary mixture's objective with the estimator optimised out."""
        _, base, info = self.closed_form(q, xi)
        wx = {}
        for (xi_idx, _), w in xi.items():
            wx[xi_idx] = wx.get(xi_idx, 0.0) + w
        idx = list(wx)
        k, N = self.k, len(idx)
        rows = []
        for j, xi_idx in enumerate(idx):
            M = self.prof[xi_idx]
            blk = np.zeros((M.shape[1], k + N))
            blk[:, :k] = M.T
            blk[:, k + j] = -1.0
            rows.append(blk)
        A_ub = np.vstack(rows)
        obj = np.concatenate([-info, [wx[i] for i in idx]])
        A_eq = np.concatenate([np.ones(k), np.zeros(N)])[None, :]
        lo = np.concatenate([np.zeros(k), np.full(N, -INF)])
        sol = linprog(obj, A_ub, np.zeros(len(A_ub)), A_eq, [1.0], lo=lo)
        if not sol.optimal:
            return -INF
        return float(sol.value + base)

    def _compile(self):
        """Epigraph program over (pi, v_hat) on the current grid, with q as a parameter.

        Writing v_hat = pi(a) * g, the divergence term becomes a sum of relative
        entropies rel_entr(pi_a, pi_a + eta q_c v_hat_c), so each grid row is linear
        in (pi, v_hat, T) once T bounds those entropies from above.
        """
        k, ns, m, eta = self.k, self.ns, self.m, self.eta
        qp = cp.Parameter(m, nonneg=True)
        pi = cp.Variable(k)
        V = cp.Variable((k * ns, m))
        T = cp.Variable(k * ns)
        t = cp.Variable()
        cons = [pi >= self.floor, cp.sum(pi) == 1]
        for a in range(k):
            for s in range(ns):
                r = a * ns + s
                cons.append(T[r] >= cp.sum(cp.rel_entr(pi[a] * np.ones(m), pi[a] + eta * cp.multiply(qp, V[r]))))
        Mx, Lw, Pp, B, tags = [], [], [], [], []
        for xi_idx, (M, law, vm) in enumerate(zip(self.prof, self.laws, self.vm)):
            for i in range(m):
                for j in range(M.shape[1]):
                    Mx.append(M[:, j])
                    Lw.append(law.ravel())
                    Pp.append(self.P[i])
                    B.append(-(self.P[i] @ vm))
                    tags.append((xi_idx, i))
        Lw = np.array(Lw)
        rows = (np.array(Mx) @ pi + cp.sum(cp.multiply(Lw @ V, np.array(Pp)), axis=1)
                + Lw @ T / eta + np.array(B) <= t)
        cons.append(rows)
        self._conic = (cp.Problem(cp.Minimize(t), cons), qp, pi, V, rows, tags)

    def solve(self, q, eps: float, max_refine: int = 8) -> SaddleSolution:
        q = np.asarray(q, float)
        it = 0
        for it in range(1, max_refine + 1):
            if self._conic is None:
                self._compile()
            prob, qp, pi_var, V_var, rows, tags = self._conic
            qp.value = q
            try:
                prob.solve(solver=cp.CLARABEL)
            except cp.error.SolverError as e:
                raise RuntimeError(f"saddle solve failed: {e}") from None
            if prob.status not in ("optimal", "optimal_inaccurate"):
                raise RuntimeError(f"saddle solve ended with status {prob.status}")
            pi = np.maximum(pi_var.value, self.floor)
            pi /= pi.sum()
            g = V_var.value.reshape(self.k, self.ns, self.m) / pi[:, None, None]
            value, x_star, _ = self.exact_value(q, pi, g)
            xi = {}
            for w, tag in zip(np.clip(rows.dual_value, 0, None), tags):
                if w > 1e-12:
                    xi[tag] = xi.get(tag, 0.0) + w
            total = sum(xi.values())
            xi = {key: w / total for key, w in xi.items()}
            if value > prob.value + max(eps / 4, 1e-9) and self.add_point(x_star):
                self._conic = None
                continue
            break
        lower = self.lower_bound(q, xi)
        support = [(self.X[xi_idx], self.P[i], w) for (xi_idx, i), w in sorted(xi.items())]
        return SaddleSolution(pi, g, value, lower, support, it, value - lower <= eps)


def eval_lambda(problem: SaddleProblem, q, pi, v_hat, grid: bool = False) -> float:
    """Lambda at (pi, v_hat); exact sup over the simplex unless grid=True."""
    pi = np.asarray(pi, float)
    v_hat = np.asarray(v_hat, float)
    g = v_hat / pi[:, None, None]
    step = problem.eta * g
    if np.any(~np.isfinite(barrier_conjugate_divergence(q, step))):
        return INF
    if grid:
        return problem.grid_value(q, pi, g)
    return problem.exact_value(q, pi, g)[0]


def solve_saddle(problem: SaddleProblem, q, eps: float) -> SaddleSolution:
    return problem.solve(q, eps)


# ---------------------------------------------------------------------------
# learners
# ---------------------------------------------------------------------------


class Learner:
    name = "learner"

    def start(self, n: int) -> None:
        self.n = n
        self.t = 0

    def step(self, feedback) -> np.ndarray:
        """Policy for the next round given the previous round's (action, signal) or None."""
        if self.t >= self.n:
            raise RuntimeError(f"{self.name}: called past the horizon n={self.n}")
        if feedback is not None:
            self.observe(*feedback)
        self.t += 1
        return self.policy()

    def observe(self, a: int, s: int) -> None:
        pass

    def policy(self) -> np.ndarray:
        raise NotImplementedError

    def frozen(self) -> np.ndarray | None:
        """The policy for every remaining round if it can no longer change, else None."""
        return None


class FixedPolicy(Learner):
    name = "fixed"

    def __init__(self, pi):
        self.pi = np.asarray(pi, float)

    def policy(self):
        return self.pi

    def frozen(self):
        return self.pi


class Uniform(FixedPolicy):
    name = "uniform"

    def __init__(self, k: int):
        super().__init__(np.full(k, 1.0 / k))


def learning_rate(m: int, n: int, lam: float, psi: float) -> float:
    """Tuned rate lam * (m log(n/m) / n)**(1 - 1/lam) * psi**(-1/lam)."""
    psi = min(max(psi, 1e-12), 1e12)
    log_term = max(math.log(n / m), 1.0)
    return lam * (m * log_term / n) ** (1 - 1 / lam) * psi ** (-1 / lam)


def regret_bound(n: int, m: int, eta: float, lam: float, psi: float, eps: float, vmax: float) -> float:
    return (n * eps + 2 * vmax + m * max(math.log(n / m), 1.0) / eta
            + n * per_round_bound(eta, lam, psi))


def per_round_bound(eta: float, lam: float, psi: float) -> float:
    return ((lam - 1) / lam) * (eta * psi / lam) ** (1 / (lam - 1))


class ExpByOpt(Learner):
    """Mirror descent on the piece weights with a per-round optimised policy and estimator."""

    name = "exp-by-opt"

    def __init__(self, game: Game, mode: str, lam: float = 2.0, psi: float | None = None,
                 eta: float | None = None, eps: float | None = None, max_refine: int = 8):
        self.game, self.mode, self.lam = game, check_mode(mode), lam
        self.pv = build_piecewise(game, mode)
        if psi is None and eta is None:
            from .info import minimax_sweep
            psi = minimax_sweep(game, mode, lam).value
        self.psi = psi
        self._eta, self._eps = eta, eps
        self.max_refine = max_refine

    def start(self, n: int) -> None:
        super().start(n)
        m = self.pv.m
        if n < m:
            raise ValueError(f"horizon {n} is below the piece count {m}")
        eta = self._eta if self._eta is not None else learning_rate(m, n, self.lam, self.psi)
        eps = self._eps if self._eps is not None else 1.0 / n
        self.state = LearnerState(np.full(m, 1.0 / m), eta, eps, n, 0, self.pv)
        self.problem = SaddleProblem(self.game, self.mode, self.pv, n, eta)
        self.current = None
        self.trace = []  # per round: (Lambda value, lower bound, kkt residual)
        self.kkt_max = 0.0

    def policy(self):
        st = self.state
        st.t = self.t
        sol = self.problem.solve(st.q, st.eps, self.max_refine)
        self.current = sol
        self.trace.append((sol.value, sol.lower))
        return sol.policy

    def observe(self, a: int, s: int) -> None:
        st = self.state
        g = self.current.gscaled[a, s]
        st.q, res = md_update(st.q, st.eta, g, st.n, return_residual=True)
        self.kkt_max = max(self.kkt_max, res)
        if res > 1e-8:
            raise RuntimeError(f"mirror-descent KKT residual {res:.2e} at round {self.t}; q={st.q.tolist()}")
        st.check_domain()


@dataclass
class BoundAudit:
    regret: float
    bound: float  # right-hand side including the measured slack
    slack: float  # rounds where the achieved Lambda exceeded eps plus the per-round term
    terms: dict

    @property
    def violated(self) -> bool:
        return self.regret > self.bound


def bound_audit(learner: ExpByOpt, regret: float) -> BoundAudit:
    """Compare a finished run's regret with the regret bound of the tuned algorithm."""
    st = learner.state
    n, m, eta, lam, psi = st.n, learner.pv.m, st.eta, learner.lam, learner.psi
    per_round = per_round_bound(eta, lam, psi)
    slack = float(sum(max(0.0, value - st.eps - per_round) for value, _ in learner.trace))
    vmax = float(np.abs(learner.pv.pieces).max())
    terms = {
        "approximation": n * st.eps,
        "range": 2 * vmax,
        "divergence": m * max(math.log(n / m), 1.0) / eta,
        "information": n * per_round,
        "slack": slack,
    }
    return BoundAudit(float(regret), float(sum(terms.values())), slack, terms)


def _l1_fit(game: Game, actions, freq):
    """Latent distribution whose signal laws on the given actions are l1-closest to freq."""
    d = game.d
    rows, target = [], []
    for a in actions:
        for s in range(game.n_symbols):
            rows.append((game.signal[a] == s).astype(float))
            target.append(freq[a, s])
    A = np.array(rows)
    t = np.array(target)
    r = len(t)
    # variables (x, e): min sum e, -e <= A x - t <= e
    c = np.concatenate([np.zeros(d), np.ones(r)])
    A_ub = np.vstack([np.hstack([A, -np.eye(r)]), np.hstack([-A, -np.eye(r)])])
    b_ub = np.concatenate([t, -t])
    A_eq = np.concatenate([np.ones(d), np.zeros(r)])[None, :]
    sol = linprog(c, A_ub, b_ub, A_eq, [1.0])
    x = np.clip(sol.x[:d], 0, None)
    return x / x.sum()


class ExploreThenCommit(Learner):
    """Round-robin over the informative actions, then commit to the estimated optimum.

    schedule="sequential" stops as soon as every Pareto comparison is resolved at
    confidence width conf*sqrt(log(n)/t); an integer schedule explores for that
    many rounds.
    """

    name = "etc"

    def __init__(self, game: Game, mode: str, schedule="sequential", conf: float = 2.0, explore=None):
        self.game, self.mode = game, check_mode(mode)
        self.classes = classify_actions(game)
        if not self.classes.globally_observable:
            raise ValueError(f"{game.name}: explore-then-commit needs a globally observable game")
        self.pareto = self.classes.pareto
        self.pairs = [(a, b, self.classes.estimators[(a, b)])
                      for a in self.pareto for b in self.pareto if a < b]
        if explore is None:
            used = set()
            for _, _, tab in self.pairs:
                used |= {c for c in range(game.k) if np.abs(tab[c]).max() > 1e-12}
            explore = sorted(used) or list(range(game.k))
        self.explore = list(explore)
        self.schedule = schedule
        self.conf = conf

    def start(self, n: int) -> None:
        super().start(n)
        self.counts = np.zeros((self.game.k, self.game.n_symbols))
        self.committed = None
        self.last = None

    def observe(self, a, s):
        if self.committed is None:
            self.counts[a, s] += 1

    def frozen(self):
        return self.committed

    def _estimates(self):
        plays = self.counts.sum(axis=1)
        freq = self.counts / np.maximum(plays, 1)[:, None]
        out = []
        for a, b, tab in self.pairs:
            est = float(np.sum(freq * tab))
            width = 0.0
            for c in range(self.game.k):
                rng_c = np.ptp(tab[c])
                if rng_c > 0:
                    width += rng_c * math.sqrt(math.log(max(self.n, 2)) / (2 * max(plays[c], 1)))
            out.append((a, b, est, self.conf * width))
        return freq, out

    def _try_commit(self, force=False):
        freq, ests = self._estimates()
        resolved = all(abs(e) > w for _, _, e, w in ests)
        if not (resolved or force):
            return
        if self.mode == "standard" or not ests:
            score = {a: 0.0 for a in self.pareto}
            for a, b, e, _ in ests:
                # e estimates loss(a) - loss(b)
                score[a] += e
                score[b] -= e
            best = min(score, key=score.get)
            pi = np.zeros(self.game.k)
            pi[best] = 1.0
        else:
            x_hat = _l1_fit(self.game, self.explore, freq)
            pi = optimal_policy(self.game, self.mode, x_hat)
        self.committed = pi

    def policy(self):
        if self.committed is not None:
            return self.committed
        t_explore = self.t - 1
        if isinstance(self.schedule, int) and t_explore >= self.schedule:
            self._try_commit(force=True)
            return self.committed
        if self.schedule == "sequential" and t_explore > 0 and t_explore % len(self.explore) == 0:
            self._try_commit()
            if self.committed is not None:
                return self.committed
        pi = np.zeros(self.game.k)
        pi[self.explore[t_explore % len(self.explore)]] = 1.0
        return pi


@dataclass
class ExoticEtcConfig:
    phase1_exponent: float = 4 / 7
    phase2_exponent: float = 6 / 7
    margin1: float = 4.0  # commit when |estimate| > margin1*sqrt(log n)*n^(-2/7)
    margin2: float = 4.0  # and margin2*sqrt(log n)*n^(-3/7) in phase two


class ExoticEtc(Learner):
    """Two-phase explore-then-commit for the 9x8 game (actions numbered from 0 here).

    Signal-one frequencies s5..s9 give u = s7 - s5 - s6 and v = 1 - s7 - s8 - s9.
    Action 1 is optimal when v >= 0, action 2 when v <= 0, action 3 when u >= 0 and
    action 4 when u <= 0.
    """

    name = "exotic-etc"

    def __init__(self, game: Game | None = None, config: ExoticEtcConfig | None = None):
        self.cfg = config or ExoticEtcConfig()
        self.k = 9

    def start(self, n: int) -> None:
        super().start(n)
        c = self.cfg
        self.n1 = max(1, int(round(n ** c.phase1_exponent)))
        self.n2 = int(round(n ** c.phase2_exponent))
        self.hits = np.zeros(9)
        self.plays = np.zeros(9)
        self.schedule = [a for _ in range(self.n1) for a in (4, 5, 6, 7, 8)]
        self.phase = 1
        self.committed = None
        self.phase2_start = None

    def observe(self, a, s):
        if self.committed is None:
            self.plays[a] += 1
            self.hits[a] += s

    def frozen(self):
        return self.committed

    def estimates(self):
        f = self.hits / np.maximum(self.plays, 1)
        u = f[6] - f[4] - f[5]
        v = 1.0 - f[6] - f[7] - f[8]
        return u, v

    def _onehot(self, a):
        pi = np.zeros(self.k)
        pi[a] = 1.0
        return pi

    def policy(self):
        if self.committed is not None:
            return self.committed
        t0 = self.t - 1
        logn = math.sqrt(math.log(self.n))
        if self.phase == 1:
            if t0 < len(self.schedule):
                return self._onehot(self.schedule[t0])
            u, v = self.estimates()
            m1 = self.cfg.margin1 * logn * self.n ** (-2 / 7)
            if abs(v) > m1:
                self.committed = self._onehot(0 if v > 0 else 1)
            elif abs(u) > m1:
                self.committed = self._onehot(2 if u > 0 else 3)
            else:
                self.phase = 2
                self.phase2_start = t0
            if self.committed is not None:
                return self.committed
        j = t0 - self.phase2_start
        if j < self.n2:
            return self._onehot(4 + j % 3)
        u, _ = self.estimates()
        m2 = self.cfg.margin2 * logn * self.n ** (-3 / 7)
        if abs(u) > m2:
            self.committed = self._onehot(2 if u > 0 else 3)
        else:
            pi = np.zeros(self.k)
            pi[[2, 3]] = 0.5
            self.committed = pi
        return self.committed
