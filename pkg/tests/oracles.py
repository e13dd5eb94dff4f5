"""Independent reference computations used only by the tests."""

import itertools

import numpy as np
from scipy.optimize import linprog as scipy_linprog


def scipy_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, None)):
    res = scipy_linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res


def brute_vertices(A, b, A_eq=None, b_eq=None, tol=1e-9):
    """Vertices of {Ax <= b, A_eq x = b_eq} by trying every set of d active constraints."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    d = A.shape[1]
    E = np.zeros((0, d)) if A_eq is None else np.asarray(A_eq, float).reshape(-1, d)
    e = np.zeros(0) if b_eq is None else np.asarray(b_eq, float).ravel()
    need = d - np.linalg.matrix_rank(E) if len(E) else d
    out = []
    for rows in itertools.combinations(range(len(A)), need):
        M = np.vstack([E, A[list(rows)]])
        r = np.concatenate([e, b[list(rows)]])
        if np.linalg.matrix_rank(M) < d:
            continue
        x, *_ = np.linalg.lstsq(M, r, rcond=None)
        if np.abs(M @ x - r).max() > 1e-9:
            continue
        if np.all(A @ x <= b + tol) and (len(E) == 0 or np.abs(E @ x - e).max() <= tol):
            if not any(np.abs(x - y).max() <= 1e-8 for y in out):
                out.append(x)
    return np.array(out)


def rclass_vertices_brute(game, x):
    """Vertices of {y in simplex : every action's signal law at y equals the one at x}."""
    d = game.d
    rows = []
    for a in range(game.k):
        for s in range(game.n_symbols):
            rows.append((game.signal[a] == s).astype(float))
    S = np.array(rows)
    A_eq = np.vstack([S, np.ones((1, d))])
    b_eq = np.concatenate([S @ x, [1.0]])
    # keep a row basis so the active-set count is right
    rank = np.linalg.matrix_rank(A_eq, tol=1e-10)
    keep = []
    for i in range(len(A_eq)):
        trial = keep + [i]
        if np.linalg.matrix_rank(A_eq[trial], tol=1e-10) == len(trial):
            keep = trial
        if len(keep) == rank:
            break
    return brute_vertices(-np.eye(d), np.zeros(d), A_eq[keep], b_eq[keep])


def rustichini_star_grid(game, x, step=1e-3):
    """min over a policy grid (two actions) of max over R-class vertices of pi L y."""
    assert game.k == 2
    V = rclass_vertices_brute(game, x)
    prof = game.loss @ V.T  # k x J
    t = np.arange(0.0, 1.0 + step / 2, step)
    vals = np.max(np.outer(t, prof[0]) + np.outer(1 - t, prof[1]), axis=1)
    i = int(np.argmin(vals))
    # polish between the neighbouring grid points; the objective is convex piecewise linear in t
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
    fine = np.linspace(lo, hi, 2001)
    return float(np.min(np.max(np.outer(fine, prof[0]) + np.outer(1 - fine, prof[1]), axis=1)))


def md_objective(p, q, eta, g):
    return float(p @ g + np.sum(p / q - np.log(p / q) - 1.0) / eta)


def md_update_newton(q, eta, g, n, iters=200):
    """Projected Newton for min <p,g> + D(p,q)/eta over the simplex with p >= 1/n.

    The Hessian is diagonal, so each scaled projection is a 1-D bisection on the
    multiplier of the sum constraint.
    """
    q = np.asarray(q, float)
    g = np.asarray(g, float)
    lo = 1.0 / n

    def project(z, h):
        # argmin sum h_i (y_i - z_i)^2 over {sum y = 1, lo <= y <= 1}
        a, b = -1e6, 1e6
        for _ in range(300):
            mu = 0.5 * (a + b)
            y = np.clip(z - mu / h, lo, 1.0)
            if y.sum() > 1.0:
                a = mu
            else:
                b = mu
        return np.clip(z - 0.5 * (a + b) / h, lo, 1.0)

    p = project(q, np.ones_like(q))
    f = md_objective(p, q, eta, g)
    for _ in range(iters):
        grad = g + (1.0 / q - 1.0 / p) / eta
        h = 1.0 / (eta * p * p)
        target = project(p - grad / h, h)
        step = 1.0
        while step > 1e-12:
            cand = p + step * (target - p)
            fc = md_objective(cand, q, eta, g)
            if fc <= f + 1e-4 * step * float(grad @ (target - p)):
                break
            step *= 0.5
        if np.abs(cand - p).max() < 1e-15:
            p = cand
            break
        p, f = cand, fc
    return p


def domain_point(rng, m, n):
    """Random point of {q in simplex : q >= 1/n}."""
    return 1.0 / n + (1.0 - m / n) * rng.dirichlet(np.ones(m))
