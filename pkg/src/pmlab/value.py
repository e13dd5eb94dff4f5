"""Standard and Rustichini value functions and the polyhedral structure they induce."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .game import Game, as_simplex_point, equivalence_polytope
from .numerics import INF, LinearProgram, Polytope, enumerate_vertices, linprog, solve_lp

MODES = ("standard", "rustichini")


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


# ---------------------------------------------------------------------------
# pointwise values
# ---------------------------------------------------------------------------

def standard_value(game: Game, pi, x) -> float:
    return float(np.asarray(pi) @ game.loss @ np.asarray(x))


def standard_value_star(game: Game, x) -> float:
    return float(np.min(game.loss @ np.asarray(x)))


def rclass_vertices(game: Game, x) -> np.ndarray:
    """Vertices of the R-class of x (cached per game, keyed by the signal statistics)."""
    x = np.asarray(x, dtype=float)
    S = game.signal_basis()
    if S.shape[0] == game.d:
        return x[None, :].copy()
    key = ("rv", np.round(S @ x, 12).tobytes())
    cache = game._cache
    if key not in cache:
        V = equivalence_polytope(game, x).vertices()
        if len(V) == 0:  # numerical corner case: x itself is always in its class
            V = x[None, :].copy()
        if len(cache) > 20000:
            for k in [k for k in cache if isinstance(k, tuple) and k[0] == "rv"][:10000]:
                del cache[k]
        cache[key] = V
    return cache[key]


def loss_profile(game: Game, mode: str, x) -> np.ndarray:
    """k x J matrix M with V(pi, x) = max_j (pi @ M)[j]."""
    x = np.asarray(x, dtype=float)
    if mode == "standard":
        return (game.loss @ x)[:, None]
    return game.loss @ rclass_vertices(game, x).T


def rustichini_value(game: Game, pi, x, method: str = "lp") -> float:
    """max of pi^T L y over the R-class of x."""
    pi = np.asarray(pi, dtype=float)
    x = np.asarray(x, dtype=float)
    if method == "vertices":
        return float(np.max(pi @ loss_profile(game, "rustichini", x)))
    S = game.signal_basis()
    sol = linprog(pi @ game.loss, A_eq=S, b_eq=S @ x, maximize=True)
    if not sol.optimal:
        raise RuntimeError(f"R-class LP failed with status {sol.status}")
    return float(sol.value)


def _vstar_lp(game: Game, x):
    """Dual LP: min <lam, Sx> s.t. L^T pi <= S^T lam, sum pi = 1, pi >= 0, lam free."""
    S = game.signal_basis()
    k, r, d = game.k, S.shape[0], game.d
    c = np.concatenate([np.zeros(k), S @ x])
    A_ub = np.hstack([game.loss.T, -S.T])
    A_eq = np.concatenate([np.ones(k), np.zeros(r)])[None, :]
    lo = np.concatenate([np.zeros(k), np.full(r, -INF)])
    sol = linprog(c, A_ub, np.zeros(d), A_eq, [1.0], lo=lo, hi=INF)
    if not sol.optimal:
        raise RuntimeError(f"value LP failed with status {sol.status}")
    pi = np.clip(sol.x[:k], 0.0, None)
    pi /= pi.sum()
    piece = S.T @ sol.x[k:]
    return float(sol.value), pi, piece


def rustichini_value_star(game: Game, x):
    """(optimal value, a minimising policy)."""
    x = as_simplex_point(x, game.d)
    val, pi, _ = _vstar_lp(game, x)
    return val, pi


def value(game: Game, mode: str, pi, x) -> float:
    if check_mode(mode) == "standard":
        return standard_value(game, pi, x)
    return rustichini_value(game, pi, x, method="vertices")


def value_star(game: Game, mode: str, x) -> float:
    if check_mode(mode) == "standard":
        return standard_value_star(game, x)
    return rustichini_value_star(game, x)[0]


def optimal_policy(game: Game, mode: str, x) -> np.ndarray:
    if check_mode(mode) == "standard":
        pi = np.zeros(game.k)
        pi[int(np.argmin(game.loss @ np.asarray(x)))] = 1.0
        return pi
    return rustichini_value_star(game, x)[1]


# ---------------------------------------------------------------------------
# piecewise-linear representation
# ---------------------------------------------------------------------------

class IncompletePieceFamily(RuntimeError):
    def __init__(self, witness, gap):
        super().__init__(f"incomplete piece family: gap {gap:.3g} at x={np.round(witness, 6).tolist()}")
        self.witness = witness
        self.gap = gap


@dataclass
class PiecewiseValue:
    """V*(x) = min over rows v of <v, x>."""

    pieces: np.ndarray
    mode: str

    @property
    def m(self) -> int:
        return self.pieces.shape[0]

    @property
    def d(self) -> int:
        return self.pieces.shape[1]

    def vector(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.pieces.T

    def __call__(self, x):
        return self.vector(x).min(axis=-1)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "m": self.m, "pieces": self.pieces.tolist()}


def _dedup_rows(V: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    out = []
    for v in V:
        if not any(np.abs(v - o).max() <= tol for o in out):
            out.append(v)
    return np.array(out)


def prune_pieces(V: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Drop pieces that never strictly undercut the remaining ones on the simplex."""
    V = _dedup_rows(V)
    keep = list(range(len(V)))
    d = V.shape[1]
    for a in range(len(V)):
        others = [b for b in keep if b != a]
        if not others:
            continue
        # max t s.t. t <= <v_b - v_a, x> for b in others, x in simplex
        D = V[others] - V[a]
        A_ub = np.hstack([-D, np.ones((len(others), 1))])
        c = np.concatenate([np.zeros(d), [1.0]])
        A_eq = np.concatenate([np.ones(d), [0.0]])[None, :]
        lo = np.concatenate([np.zeros(d), [-INF]])
        sol = linprog(c, A_ub, np.zeros(len(others)), A_eq, [1.0], lo=lo, maximize=True)
        if sol.optimal and sol.value <= tol:
            keep.remove(a)
    return V[keep]


def _sample_points(rng, d, n):
    half = n // 2
    return np.vstack([rng.dirichlet(np.ones(d), size=half), rng.dirichlet(np.full(d, 0.3), size=n - half)])


def build_piecewise(game: Game, mode: str, n_samples: int | None = None, seed: int = 0,
                    n_validate: int = 1000) -> PiecewiseValue:
    """Finite family of linear pieces whose pointwise minimum is V*."""
    check_mode(mode)
    key = ("pv", mode, n_samples, seed)
    if key in game._cache:
        return game._cache[key]
    if mode == "standard":
        pv = PiecewiseValue(prune_pieces(game.loss.copy()), mode)
        game._cache[key] = pv
        return pv
    d = game.d
    rng = np.random.default_rng(seed)
    n_samples = 500 * d if n_samples is None else n_samples
    pts = np.vstack([np.eye(d), np.full((1, d), 1.0 / d), _sample_points(rng, d, n_samples)])
    harvested = [_vstar_lp(game, x)[2] for x in pts]
    V = prune_pieces(np.array(harvested))
    for _ in range(20):
        X = _sample_points(rng, d, n_validate)
        truth = np.array([_vstar_lp(game, x)[0] for x in X])
        gap = (X @ V.T).min(axis=1) - truth
        bad = np.flatnonzero(gap > 1e-7)
        if bad.size == 0:
            break
        V = prune_pieces(np.vstack([V] + [_vstar_lp(game, X[i])[2] for i in bad]))
    else:
        i = int(np.argmax(gap))
        raise IncompletePieceFamily(X[i], gap[i])
    if gap.max() > 1e-6:
        i = int(np.argmax(gap))
        raise IncompletePieceFamily(X[i], gap[i])
    pv = PiecewiseValue(V, mode)
    game._cache[key] = pv
    return pv


# ---------------------------------------------------------------------------
# cells, faces and Nash sets
# ---------------------------------------------------------------------------

@dataclass
class Face:
    cell: int
    active: frozenset  # indices of cell inequality rows tight on the whole face
    vertices: np.ndarray
    polytope: Polytope

    @property
    def dim(self) -> int:
        return self.polytope.affine_dim()

    def relative_interior_sample(self, rng) -> np.ndarray:
        w = rng.dirichlet(np.ones(len(self.vertices)))
        return w @ self.vertices


@dataclass
class CellComplex:
    pv: PiecewiseValue
    cells: list  # (piece index, Polytope)
    _faces: list | None = field(default=None, repr=False)

    def cell_of(self, x) -> int:
        return int(np.argmin(self.pv.vector(x)))

    def faces(self, max_faces: int = 200000) -> list:
        """All faces of all cells, deduplicated by vertex set (computed on first call)."""
        if self._faces is not None:
            return self._faces
        registry: dict = {}
        for ci, (alpha, P) in enumerate(self.cells):
            V = P.vertices()
            if len(V) == 0:
                continue
            slack = P.b[None, :] - V @ P.A.T
            tight = slack <= 1e-9
            frontier = [frozenset(range(len(V)))]
            seen = set(frontier)
            while frontier:
                nxt = []
                for F in frontier:
                    idx = sorted(F)
                    active = frozenset(np.flatnonzero(tight[idx].all(axis=0)).tolist())
                    gkey = frozenset(tuple(np.round(V[i], 9)) for i in idx)
                    if gkey not in registry:
                        act = sorted(active)
                        poly = Polytope(P.A, P.b, np.vstack([P.A_eq, P.A[act]]),
                                        np.concatenate([P.b_eq, P.b[act]]))
                        poly._vertices = V[idx]
                        registry[gkey] = Face(alpha, active, V[idx], poly)
                        if len(registry) > max_faces:
                            raise RuntimeError("face enumeration exceeded its cap")
                    for row in range(P.A.shape[0]):
                        if row in active:
                            continue
                        G = frozenset(i for i in F if tight[i, row])
                        if G and G not in seen:
                            seen.add(G)
                            nxt.append(G)
                frontier = nxt
        self._faces = list(registry.values())
        return self._faces


def cell_polytope(pieces: np.ndarray, alpha: int) -> Polytope:
    others = [b for b in range(len(pieces)) if b != alpha]
    D = pieces[alpha] - pieces[others]
    return Polytope.simplex(pieces.shape[1], extra_A=D, extra_b=np.zeros(len(others)))


def cell_complex(pv: PiecewiseValue) -> CellComplex:
    return CellComplex(pv, [(a, cell_polytope(pv.pieces, a)) for a in range(pv.m)])


def nash_set(game: Game, x, mode: str = "rustichini", tol: float = 1e-11) -> Polytope:
    """Policies with zero instantaneous regret at x, with vertices attached."""
    x = np.asarray(x, dtype=float)
    k = game.k
    if check_mode(mode) == "standard":
        lx = game.loss @ x
        off = np.flatnonzero(lx > lx.min() + tol)
        E = np.eye(k)[off]
        P = Polytope.simplex(k, extra_eq=E, extra_beq=np.zeros(len(off)))
    else:
        vstar = rustichini_value_star(game, x)[0]
        M = loss_profile(game, mode, x)
        P = Polytope.simplex(k, extra_A=M.T, extra_b=np.full(M.shape[1], vstar + tol * (1 + abs(vstar))))
    P._vertices = enumerate_vertices(P)
    if len(P._vertices) == 0:
        raise RuntimeError("empty Nash set")
    return P


def same_polytope(P: Polytope, Q: Polytope, tol: float = 1e-7) -> bool:
    return (all(Q.contains(v, tol) for v in P.vertices())
            and all(P.contains(v, tol) for v in Q.vertices()))


# ---------------------------------------------------------------------------
# action classification and observability
# ---------------------------------------------------------------------------

@dataclass
class ActionClass:
    labels: list  # "pareto" | "degenerate" | "dominated"
    cell_dims: list
    estimators: dict  # (a, b) -> k x |Sigma| array or None

    @property
    def pareto(self) -> list:
        return [a for a, lab in enumerate(self.labels) if lab == "pareto"]

    def observable(self, a: int, b: int) -> bool:
        key = (min(a, b), max(a, b))
        return self.estimators.get(key) is not None

    @property
    def globally_observable(self) -> bool:
        return all(self.observable(a, b) for a, b in itertools.combinations(self.pareto, 2))

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "cell_dims": self.cell_dims,
            "globally_observable": self.globally_observable,
            "pairs": [
                {"a": a + 1, "b": b + 1, "observable": v is not None,
                 "estimator": None if v is None else v.tolist()}
                for (a, b), v in sorted(self.estimators.items())
            ],
        }


def estimation_function(game: Game, diff) -> np.ndarray | None:
    """Table v[c, s] with sum_c v[c, S(c, z)] = diff[z] for all z, or None."""
    S = game.signal_indicator()  # (k*ns) x d
    sol, *_ = np.linalg.lstsq(S.T, np.asarray(diff, float), rcond=None)
    if np.abs(S.T @ sol - diff).max() > 1e-8:
        return None
    table = sol.reshape(game.k, game.n_symbols)
    present = np.zeros_like(table, dtype=bool)
    for a in range(game.k):
        present[a, np.unique(game.signal[a])] = True
    table[~present] = 0.0
    return table


def apply_estimator(game: Game, table, z: int) -> float:
    return float(sum(table[c, game.signal[c, z]] for c in range(game.k)))


def classify_actions(game: Game) -> ActionClass:
    labels, dims = [], []
    full = game.d - 1
    for a in range(game.k):
        D = game.loss[a] - np.delete(game.loss, a, axis=0)
        P = Polytope.simplex(game.d, extra_A=D, extra_b=np.zeros(len(D)))
        dim = P.affine_dim()
        dims.append(dim)
        labels.append("dominated" if dim < 0 else "pareto" if dim == full else "degenerate")
    est = {}
    for a, b in itertools.combinations(range(game.k), 2):
        est[(a, b)] = estimation_function(game, game.loss[a] - game.loss[b])
    return ActionClass(labels, dims, est)
