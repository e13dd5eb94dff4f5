"""Small dense linear programming, polytope utilities and 1-D root finding.

Everything here is sized for desk-scale problems (a few hundred variables at
most).  The LP solver is a revised simplex with an explicit basis inverse,
Dantzig pricing and a switch to Bland's rule once it detects a run of
degenerate pivots, so results are deterministic for a given input.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

INF = math.inf


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-9
    optimality: float = 1e-8
    dedup: float = 1e-8
    pivot: float = 1e-11


TOL = Tolerances()


@contextlib.contextmanager
def tolerances(**overrides):
    """Temporarily override the global tolerances."""
    global TOL
    saved = TOL
    TOL = replace(TOL, **overrides)
    try:
        yield TOL
    finally:
        TOL = saved


# ---------------------------------------------------------------------------
# Linear programming
# ---------------------------------------------------------------------------

LE, EQ, GE = "<=", "=", ">="


@dataclass
class LinearProgram:
    """min (or max) c.x subject to A x (senses) b and lo <= x <= hi."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: Sequence[str]
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if isinstance(self.senses, str):
            self.senses = [self.senses] * self.A.shape[0]
        self.senses = list(self.senses)
        self.lo = np.zeros(n) if self.lo is None else np.broadcast_to(np.asarray(self.lo, float), (n,)).copy()
        self.hi = np.full(n, INF) if self.hi is None else np.broadcast_to(np.asarray(self.hi, float), (n,)).copy()
        if self.b.size != self.A.shape[0] or len(self.senses) != self.A.shape[0]:
            raise ValueError("inconsistent LP dimensions")
        if any(s not in (LE, EQ, GE) for s in self.senses):
            raise ValueError(f"unknown constraint sense in {self.senses}")
        if np.any(self.lo > self.hi):
            raise ValueError("variable lower bound exceeds upper bound")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP data must be finite")

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = math.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None  # d(value)/d(b_i) for each original row
    basis: tuple[int, ...] = ()
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Simplex:
    """Revised simplex on min c.x, A x = b, x >= 0 with b >= 0."""

    def __init__(self, A, b, c, basis, allowed):
        self.A = A
        self.b = b
        self.c = c
        self.basis = list(basis)
        self.allowed = allowed  # columns allowed to enter
        self.m, self.n = A.shape
        self.iterations = 0
        self.refactor()

    def refactor(self):
        if self.m:
            self.Binv = np.linalg.inv(self.A[:, self.basis])
            self.xB = self.Binv @ self.b
        else:
            self.Binv = np.zeros((0, 0))
            self.xB = np.zeros(0)
        self.since_refactor = 0

    def run(self, max_iter=50_000):
        tol_opt = TOL.optimality * 1e-2
        tol_piv = TOL.pivot
        bland = False
        degenerate_run = 0
        is_basic = np.zeros(self.n, dtype=bool)
        is_basic[self.basis] = True
        while self.iterations < max_iter:
            y = self.c[self.basis] @ self.Binv if self.m else np.zeros(0)
            d = self.c - y @ self.A
            d[is_basic] = 0.0
            d[~self.allowed] = 0.0
            scale = 1.0 + np.abs(self.c).max(initial=0.0)
            cand = np.flatnonzero(d < -tol_opt * scale)
            if cand.size == 0:
                return "optimal"
            j = cand[0] if bland else cand[np.argmin(d[cand])]
            col = self.Binv @ self.A[:, j]
            rows = np.flatnonzero(col > tol_piv * (1.0 + np.abs(col).max()))
            if rows.size == 0:
                return "unbounded"
            ratios = np.maximum(self.xB[rows], 0.0) / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + best)]
            if ties.size > 1:
                # Bland: leave the basic variable with the smallest index
                r = ties[np.argmin(np.asarray(self.basis)[ties])]
            else:
                r = ties[0]
            step = self.xB[r] / col[r]
            if step <= TOL.feasibility:
                degenerate_run += 1
                if degenerate_run > 30:
                    bland = True
            else:
                degenerate_run = 0
            self._pivot(r, j, col)
            is_basic[:] = False
            is_basic[self.basis] = True
            self.iterations += 1
        raise RuntimeError("simplex iteration limit reached")

    def _pivot(self, r, j, col):
        piv = col[r]
        row_r = self.Binv[r] / piv
        self.Binv = self.Binv - np.outer(col, row_r)
        self.Binv[r] = row_r
        self.basis[r] = j
        self.since_refactor += 1
        if self.since_refactor >= 64:
            self.refactor()
        else:
            self.xB = self.Binv @ self.b

    def solution(self):
        x = np.zeros(self.n)
        x[self.basis] = self.xB
        return x

    def duals(self):
        return self.c[self.basis] @ self.Binv if self.m else np.zeros(0)


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` and return a basic optimal solution when one exists."""
    n = lp.n
    # --- variable substitution: x = offset + T @ x_std, x_std >= 0
    cols_T: list[tuple[int, float]] = []  # (original var, coef) per std column
    offset = np.zeros(n)
    extra_rows = []  # (std col, upper) for finite-width boxes
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols_T.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols_T) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols_T.append((j, -1.0))
        else:
            cols_T.append((j, 1.0))
            cols_T.append((j, -1.0))
    ns = len(cols_T)
    T = np.zeros((n, ns))
    for k, (j, coef) in enumerate(cols_T):
        T[j, k] = coef

    m0 = lp.A.shape[0]
    A_rows = lp.A @ T if m0 else np.zeros((0, ns))
    b_rows = lp.b - lp.A @ offset if m0 else np.zeros(0)
    senses = list(lp.senses)
    if extra_rows:
        E = np.zeros((len(extra_rows), ns))
        for i, (k, ub) in enumerate(extra_rows):
            E[i, k] = 1.0
        A_rows = np.vstack([A_rows, E])
        b_rows = np.concatenate([b_rows, [ub for _, ub in extra_rows]])
        senses += [LE] * len(extra_rows)
    m = A_rows.shape[0]
    c_std = (lp.c @ T) * (-1.0 if lp.maximize else 1.0)

    # --- slacks and sign normalisation
    n_slack = sum(s != EQ for s in senses)
    A = np.zeros((m, ns + n_slack))
    A[:, :ns] = A_rows
    b = b_rows.copy()
    slack_of_row = [-1] * m
    k = ns
    for i, s in enumerate(senses):
        if s == LE:
            A[i, k] = 1.0
        elif s == GE:
            A[i, k] = -1.0
        if s != EQ:
            slack_of_row[i] = k
            k += 1
    flip = np.where(b < 0, -1.0, 1.0)
    A *= flip[:, None]
    b *= flip
    c_full = np.concatenate([c_std, np.zeros(n_slack)])

    # --- phase one
    basis = []
    art_rows = []
    for i in range(m):
        s = slack_of_row[i]
        if s >= 0 and A[i, s] > 0:
            basis.append(s)
        else:
            basis.append(-1)
            art_rows.append(i)
    n_real = A.shape[1]
    n_art = len(art_rows)
    if n_art:
        Aart = np.zeros((m, n_art))
        for q, i in enumerate(art_rows):
            Aart[i, q] = 1.0
            basis[i] = n_real + q
        A1 = np.hstack([A, Aart])
        c1 = np.concatenate([np.zeros(n_real), np.ones(n_art)])
        allowed = np.ones(A1.shape[1], dtype=bool)
        sx = _Simplex(A1, b, c1, basis, allowed)
        sx.run()
        iters = sx.iterations
        infeas = float(c1[sx.basis] @ sx.xB)
        if infeas > TOL.feasibility * max(1.0, np.abs(b).max(initial=0.0)) * 10:
            return LpSolution("infeasible", iterations=iters)
        # drive artificials out of the basis, dropping redundant rows
        keep_rows = list(range(m))
        basis = list(sx.basis)
        Binv = sx.Binv
        drop = []
        for r in range(m):
            if basis[r] < n_real:
                continue
            row = Binv[r] @ A
            row[[bj for bj in basis if bj < n_real]] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-9:
                colj = Binv @ A[:, j]
                piv = colj[r]
                row_r = Binv[r] / piv
                Binv = Binv - np.outer(colj, row_r)
                Binv[r] = row_r
                basis[r] = j
            else:
                drop.append(r)
        if drop:
            keep_rows = [i for i in range(m) if i not in drop]
            basis = [basis[i] for i in keep_rows]
        A2, b2 = A[keep_rows], b[keep_rows]
    else:
        iters = 0
        keep_rows = list(range(m))
        A2, b2 = A, b
    sx = _Simplex(A2, b2, c_full, basis, np.ones(n_real, dtype=bool))
    status = sx.run()
    iters += sx.iterations
    if status == "unbounded":
        return LpSolution("unbounded", value=-INF if not lp.maximize else INF, iterations=iters)
    x_std = sx.solution()
    x_std[np.abs(x_std) < 1e-15] = 0.0
    x = offset + T @ x_std[:ns]
    value = float(lp.c @ x)
    y_kept = sx.duals()
    y = np.zeros(m)
    y[keep_rows] = y_kept
    y *= flip
    if lp.maximize:
        y = -y
    return LpSolution("optimal", value, x, y[:m0], tuple(sx.basis), iters)


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lo=0.0, hi=INF, maximize=False) -> LpSolution:
    """Convenience wrapper assembling a :class:`LinearProgram` from blocks."""
    c = np.asarray(c, float)
    n = c.size
    blocks, rhs, senses = [], [], []
    if A_ub is not None and len(b_ub):
        blocks.append(np.asarray(A_ub, float).reshape(-1, n))
        rhs.append(np.asarray(b_ub, float).ravel())
        senses += [LE] * blocks[-1].shape[0]
    if A_eq is not None and len(b_eq):
        blocks.append(np.asarray(A_eq, float).reshape(-1, n))
        rhs.append(np.asarray(b_eq, float).ravel())
        senses += [EQ] * blocks[-1].shape[0]
    A = np.vstack(blocks) if blocks else np.zeros((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return solve_lp(LinearProgram(c, A, b, senses, lo, hi, maximize))


# ---------------------------------------------------------------------------
# Polytopes
# ---------------------------------------------------------------------------


@dataclass
class Polytope:
    """{x : A x <= b, A_eq x = b_eq} with an optional cached vertex list."""

    A: np.ndarray
    b: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    _vertices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, float))
        self.b = np.asarray(self.b, float).ravel()
        d = self.A.shape[1]
        if self.A_eq is None:
            self.A_eq = np.zeros((0, d))
            self.b_eq = np.zeros(0)
        self.A_eq = np.asarray(self.A_eq, float).reshape(-1, d)
        self.b_eq = np.asarray(self.b_eq, float).ravel()

    @property
    def dim_ambient(self) -> int:
        return self.A.shape[1]

    @classmethod
    def simplex(cls, d: int, extra_A=None, extra_b=None, extra_eq=None, extra_beq=None) -> "Polytope":
        A = -np.eye(d)
        b = np.zeros(d)
        if extra_A is not None and len(extra_b):
            A = np.vstack([A, extra_A])
            b = np.concatenate([b, extra_b])
        A_eq = np.ones((1, d))
        b_eq = np.ones(1)
        if extra_eq is not None and len(extra_beq):
            A_eq = np.vstack([A_eq, extra_eq])
            b_eq = np.concatenate([b_eq, extra_beq])
        return cls(A, b, A_eq, b_eq)

    @classmethod
    def box(cls, lo, hi) -> "Polytope":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        d = lo.size
        return cls(np.vstack([np.eye(d), -np.eye(d)]), np.concatenate([hi, -lo]))

    def residual(self, x) -> float:
        x = np.asarray(x, float)
        r = np.max(self.A @ x - self.b, initial=0.0)
        if self.A_eq.shape[0]:
            r = max(r, np.abs(self.A_eq @ x - self.b_eq).max())
        return float(max(r, 0.0))

    def contains(self, x, tol: float | None = None) -> bool:
        return self.residual(x) <= (TOL.feasibility if tol is None else tol)

    def vertices(self) -> np.ndarray:
        if self._vertices is None:
            self._vertices = enumerate_vertices(self)
        return self._vertices

    def is_empty(self) -> bool:
        d = self.dim_ambient
        sol = linprog(np.zeros(d), self.A, self.b, self.A_eq, self.b_eq, lo=-INF, hi=INF)
        return not sol.optimal

    def intersect(self, A=None, b=None, A_eq=None, b_eq=None) -> "Polytope":
        d = self.dim_ambient
        A2 = self.A if A is None else np.vstack([self.A, np.reshape(A, (-1, d))])
        b2 = self.b if b is None else np.concatenate([self.b, np.ravel(b)])
        E2 = self.A_eq if A_eq is None else np.vstack([self.A_eq, np.reshape(A_eq, (-1, d))])
        e2 = self.b_eq if b_eq is None else np.concatenate([self.b_eq, np.ravel(b_eq)])
        return Polytope(A2, b2, E2, e2)

    def affine_dim(self) -> int:
        V = self.vertices()
        if len(V) == 0:
            return -1
        return int(np.linalg.matrix_rank(V - V.mean(axis=0), tol=TOL.dedup)) if len(V) > 1 else 0


def l1_distance(x, P: Polytope) -> float:
    """min over y in P of ||x - y||_1, as an LP with per-coordinate gaps."""
    x = np.asarray(x, float)
    d = x.size
    I = np.eye(d)
    # variables (y, t): minimise sum t with t >= |x - y|
    c = np.concatenate([np.zeros(d), np.ones(d)])
    A_ub = np.vstack([
        np.hstack([-I, -I]),  # x - y <= t
        np.hstack([I, -I]),  # y - x <= t
        np.hstack([P.A, np.zeros((P.A.shape[0], d))]),
    ])
    b_ub = np.concatenate([-x, x, P.b])
    A_eq = np.hstack([P.A_eq, np.zeros((P.A_eq.shape[0], d))])
    lo = np.concatenate([np.full(d, -INF), np.zeros(d)])
    sol = linprog(c, A_ub, b_ub, A_eq, P.b_eq, lo=lo, hi=INF)
    if sol.status == "infeasible":
        raise ValueError("empty polytope")
    return max(sol.value, 0.0)


def _nullspace(E: np.ndarray, tol: float = 1e-12):
    if E.shape[0] == 0:
        return np.eye(E.shape[1]), 0
    u, s, vt = np.linalg.svd(E)
    rank = int(np.sum(s > tol * max(1.0, s.max(initial=0.0))))
    return vt[rank:].T, rank


def enumerate_vertices(P: Polytope) -> np.ndarray:
    """All vertices of a bounded polytope, by the double description method.

    Returns an array of shape (num_vertices, d), sorted lexicographically.
    Raises ValueError("unbounded polytope") if P has a recession direction.
    """
    d = P.dim_ambient
    tol = TOL.feasibility
    # eliminate equalities: x = x0 + N z
    if P.A_eq.shape[0]:
        x0, *_ = np.linalg.lstsq(P.A_eq, P.b_eq, rcond=None)
        if np.abs(P.A_eq @ x0 - P.b_eq).max() > 1e-9 * (1 + np.abs(P.b_eq).max()):
            return np.zeros((0, d))
        N, _ = _nullspace(P.A_eq)
    else:
        x0 = np.zeros(d)
        N = np.eye(d)
    r = N.shape[1]
    Ar = P.A @ N
    br = P.b - P.A @ x0
    if r == 0:
        return x0[None, :].copy() if np.all(br >= -1e-9) else np.zeros((0, d))

    M = np.hstack([Ar, -br[:, None]])
    M = np.vstack([M, np.concatenate([np.zeros(r), [-1.0]])])
    norms = np.linalg.norm(M, axis=1)
    nz = norms > 1e-14
    # rows that are identically zero are either vacuous or make P empty
    if np.any(~nz[:-1] & (br < -1e-9)):
        return np.zeros((0, d))
    M = M[nz] / norms[nz, None]
    D = r + 1
    C = M.shape[0]

    # pick D linearly independent rows for the initial simplicial cone
    chosen: list[int] = []
    basis_rows = np.zeros((0, D))
    for i in range(C - 1, -1, -1):  # start with the t >= 0 row
        trial = np.vstack([basis_rows, M[i]])
        if np.linalg.matrix_rank(trial, tol=1e-10) > basis_rows.shape[0]:
            basis_rows = trial
            chosen.append(i)
            if len(chosen) == D:
                break
    if len(chosen) < D:
        if P.is_empty():
            return np.zeros((0, d))
        raise ValueError("unbounded polytope")
    R = -np.linalg.inv(basis_rows).T  # columns of -inv(M_K) as rows
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    processed = np.zeros(C, dtype=bool)
    processed[chosen] = True
    Z = np.abs(R @ M.T) <= tol  # zero sets against all rows
    Z[:, ~processed] = False

    for i in range(C):
        if processed[i]:
            continue
        vals = R @ M[i]
        pos = vals > tol
        neg = vals < -tol
        zer = ~(pos | neg)
        new_rays = []
        new_Z = []
        if pos.any() and neg.any():
            P_idx = np.flatnonzero(pos)
            N_idx = np.flatnonzero(neg)
            Zi = Z.astype(np.int32)
            for p in P_idx:
                common = Z[p] & Z[N_idx]  # (|N|, C)
                sizes = common.sum(axis=1)
                ok = sizes >= D - 2
                if not ok.any():
                    continue
                cand = N_idx[ok]
                common = common[ok]
                sizes = sizes[ok]
                counts = Zi @ common.T.astype(np.int32)  # (R, cand)
                containing = (counts == sizes[None, :]).sum(axis=0)
                for q, nn in enumerate(cand):
                    if containing[q] != 2:
                        continue
                    w = vals[p] * R[nn] - vals[nn] * R[p]
                    nrm = np.linalg.norm(w)
                    if nrm < 1e-14:
                        continue
                    new_rays.append(w / nrm)
                    zc = common[q].copy()
                    zc[i] = True
                    new_Z.append(zc)
        keep = ~pos
        Z[zer, i] = True
        R = R[keep]
        Z = Z[keep]
        if new_rays:
            R = np.vstack([R, np.array(new_rays)])
            Z = np.vstack([Z, np.array(new_Z)])
        processed[i] = True
        if R.shape[0] == 0:
            return np.zeros((0, d))

    t = R[:, -1]
    bounded = t > 1e-9
    if not bounded.any():
        return np.zeros((0, d))
    if (~bounded).any():
        raise ValueError("unbounded polytope")
    Zpts = R[:, :-1] / t[:, None]
    X = x0[None, :] + Zpts @ N.T
    return _dedup(X, TOL.dedup)


def _dedup(X: np.ndarray, tol: float) -> np.ndarray:
    if len(X) == 0:
        return X
    order = np.lexsort(X.T[::-1])
    X = X[order]
    out = [X[0]]
    for row in X[1:]:
        if not any(np.abs(row - o).max() <= tol for o in out):
            out.append(row)
    out = np.array(out)
    out[np.abs(out) < 1e-13] = 0.0
    return out[np.lexsort(out.T[::-1])]


def is_extreme(points: np.ndarray, i: int, tol: float = 1e-9) -> bool:
    """True when points[i] is not a convex combination of the other points."""
    others = np.delete(points, i, axis=0)
    if len(others) == 0:
        return True
    k = len(others)
    A_eq = np.vstack([others.T, np.ones((1, k))])
    b_eq = np.concatenate([points[i], [1.0]])
    sol = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq)
    return not sol.optimal


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


def solve_monotone_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
                        max_iter: int = 400) -> float:
    """Root of a nondecreasing scalar function on [lo, hi].

    Bisection with Illinois-style secant steps that are only accepted while
    they stay strictly inside the current bracket.
    """
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        if abs(flo) <= tol / 2:
            return lo
        if abs(fhi) <= tol / 2:
            return hi
        raise ValueError(f"bracket failure: f({lo})={flo}, f({hi})={fhi}")
    a, b, fa, fb = lo, hi, flo, fhi
    best, fbest = (a, fa) if abs(fa) < abs(fb) else (b, fb)
    side = 0
    for it in range(max_iter):
        if abs(fbest) <= tol / 2:
            return best
        width = b - a
        if width <= 4 * np.finfo(float).eps * max(1.0, abs(a), abs(b)):
            break
        x = None
        if it % 3 != 2 and fb != fa:
            x = b - fb * (b - a) / (fb - fa)
            if not (a + 0.01 * width < x < b - 0.01 * width):
                x = None
        if x is None:
            x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) < abs(fbest):
            best, fbest = x, fx
        if fx < 0:
            a, fa = x, fx
            if side == -1:
                fb *= 0.5
            side = -1
        elif fx > 0:
            b, fb = x, fx
            if side == 1:
                fa *= 0.5
            side = 1
        else:
            return x
    return best
