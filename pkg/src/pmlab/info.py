"""Regret gap, information gain and the lambda-information ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import Game, Prior, signal_laws
from .numerics import INF, linprog
from .value import build_piecewise, check_mode, loss_profile, value_star


def kl(p, q) -> float:
    """KL(p || q) over a finite alphabet with 0 log(0/q) = 0 and p log(p/0) = inf."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    pos = p > 0
    if np.any(q[pos] <= 0):
        return INF
    return float(max(np.sum(p[pos] * np.log(p[pos] / q[pos])), 0.0))


@dataclass
class InfoCoefficients:
    coeffs: np.ndarray  # per action, may contain inf
    mixture: np.ndarray

    def gain(self, pi) -> float:
        pi = np.asarray(pi, float)
        active = pi > 0
        return float(np.sum(pi[active] * self.coeffs[active]))


def info_coefficients(game: Game, prior: Prior) -> InfoCoefficients:
    mix = prior.mixture()
    mlaw = signal_laws(game, mix)
    c = np.zeros(game.k)
    for x in prior.atoms:
        xl = signal_laws(game, x)
        for a in range(game.k):
            c[a] += kl(mlaw[a], xl[a])
    return InfoCoefficients(c, mix)


def info_gain(game: Game, pi, prior: Prior) -> float:
    return info_coefficients(game, prior).gain(pi)


class PriorModel:
    """Per-atom value data so that regret gaps at many policies are cheap."""

    def __init__(self, game: Game, mode: str, prior: Prior):
        self.game, self.mode, self.prior = game, check_mode(mode), prior
        self.profiles = [loss_profile(game, mode, x) for x in prior.atoms]
        self.vstar = np.array([value_star(game, mode, x) for x in prior.atoms])
        self.info = info_coefficients(game, prior)

    def gap(self, pi) -> float:
        pi = np.asarray(pi, float)
        vals = np.array([np.max(pi @ M) for M in self.profiles])
        return float(max(self.prior.weights @ (vals - self.vstar), 0.0))

    def gap_lp(self, level: float = 0.0):
        """min gap subject to info gain >= level: (value, policy, slope in level)."""
        k, N = self.game.k, self.prior.size
        w = self.prior.weights
        coeffs = self.info.coeffs
        rows, rhs = [], []
        for i, M in enumerate(self.profiles):
            blk = np.zeros((M.shape[1], k + N))
            blk[:, :k] = M.T
            blk[:, k + i] = -1.0
            rows.append(blk)
            rhs.append(np.zeros(M.shape[1]))
        A_ub = np.vstack(rows)
        b_ub = np.concatenate(rhs)
        if level > 0:
            # -c.pi <= -level; finite coefficients only (callers handle inf)
            A_ub = np.vstack([A_ub, np.concatenate([-coeffs, np.zeros(N)])])
            b_ub = np.concatenate([b_ub, [-level]])
        obj = np.concatenate([np.zeros(k), w])
        A_eq = np.concatenate([np.ones(k), np.zeros(N)])[None, :]
        lo = np.concatenate([np.zeros(k), np.full(N, -INF)])
        sol = linprog(obj, A_ub, b_ub, A_eq, [1.0], lo=lo)
        if not sol.optimal:
            raise RuntimeError(f"gap LP failed with status {sol.status}")
        pi = np.clip(sol.x[:k], 0.0, None)
        pi /= pi.sum()
        slope = -sol.duals[len(b_ub) - 1] if level > 0 else 0.0
        return max(sol.value - w @ self.vstar, 0.0), pi, max(slope, 0.0)


def regret_gap(game: Game, mode: str, pi, prior: Prior) -> float:
    return PriorModel(game, mode, prior).gap(pi)


def ratio_value(gap: float, info: float, lam: float) -> float:
    """gap**lam / info with 0/0 = 0, x/inf = 0 and positive/0 = inf."""
    if gap <= 0 or math.isinf(info):
        return 0.0
    if info <= 0:
        return INF
    return gap ** lam / info


@dataclass
class RatioReport:
    lam: float
    policy: np.ndarray
    gap: float
    info: float
    ratio: float
    gap_star: float
    certificate: float  # the uniform-exploration upper bound
    trace: list = field(default_factory=list)  # (level, g(level))

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "policy": self.policy.tolist(), "gap": self.gap,
                "info": self.info, "ratio": self.ratio, "gap_star": self.gap_star,
                "certificate": self.certificate}


def certificate_bound(gap_star: float, gap: float, info: float, lam: float) -> float:
    if info <= 0:
        return INF
    if math.isinf(info):
        return 0.0
    return 2.0 ** lam * gap_star ** (lam - 1) * gap / info


def _level_curve(model: PriorModel, cmax: float, g0: float):
    """Breakpoints of the convex piecewise-linear curve level -> min gap on [0, cmax]."""
    gm, _, sm = model.gap_lp(cmax)
    # the slope at 0 is taken just to the right of it
    _, _, s0 = model.gap_lp(cmax * 1e-9)
    pts = {0.0: (g0, s0), cmax: (gm, sm)}
    stack = [(0.0, cmax)]
    while stack and len(pts) < 400:
        c1, c2 = stack.pop()
        g1, s1 = pts[c1]
        g2, s2 = pts[c2]
        if s2 - s1 <= 1e-14 * (1 + abs(s2)):
            continue
        cs = (g2 - g1 + s1 * c1 - s2 * c2) / (s1 - s2)
        if not (c1 < cs < c2):
            continue
        tangent = g1 + s1 * (cs - c1)
        gs, _, ss = model.gap_lp(cs)
        pts[cs] = (gs, ss)
        if gs - tangent > 1e-11 * (1 + abs(gs)):
            stack.append((c1, cs))
            stack.append((cs, c2))
    cs = np.array(sorted(pts))
    gs = np.array([pts[c][0] for c in cs])
    return cs, gs


def min_ratio(game: Game, mode: str, prior: Prior, lam: float, model: PriorModel | None = None) -> RatioReport:
    """Exact minimum over policies of gap**lam / info for a finitely supported prior."""
    if lam <= 1:
        raise ValueError("lambda must exceed 1")
    model = model or PriorModel(game, mode, prior)
    c = model.info.coeffs
    k = game.k
    g0, pi0, _ = model.gap_lp(0.0)
    unif = np.full(k, 1.0 / k)
    cert = certificate_bound(g0, model.gap(unif), model.info.gain(unif), lam)
    if np.any(np.isinf(c)):
        a = int(np.flatnonzero(np.isinf(c))[0])
        pi = 0.999 * pi0
        pi[a] += 0.001
        return RatioReport(lam, pi, model.gap(pi), INF, 0.0, g0, cert)
    if g0 <= 1e-12:
        return RatioReport(lam, pi0, g0, model.info.gain(pi0), 0.0, g0, cert)
    cmax = float(c.max())
    if cmax <= 0:
        return RatioReport(lam, pi0, g0, 0.0, INF, g0, cert)
    cs, gs = _level_curve(model, cmax, g0)
    best_c, best_f = cmax, INF
    for (c1, c2), (g1, g2) in zip(zip(cs[:-1], cs[1:]), zip(gs[:-1], gs[1:])):
        b = (g2 - g1) / (c2 - c1)
        a = g1 - b * c1
        cands = [c1, c2]
        if b > 0:
            cands.append(a / ((lam - 1) * b))
        for cc in cands:
            if c1 <= cc <= c2 and cc > 0:
                f = (a + b * cc) ** lam / cc
                if f < best_f:
                    best_c, best_f = cc, f
    gap, pi, _ = model.gap_lp(best_c)
    pi = np.asarray(pi)
    info = model.info.gain(pi)
    trace = [(float(ci), float(gi)) for ci, gi in zip(cs, gs)]
    r = ratio_value(model.gap(pi), info, lam)
    return RatioReport(lam, pi, model.gap(pi), info, r, g0, cert, trace)


# ---------------------------------------------------------------------------
# hard prior families
# ---------------------------------------------------------------------------

def exotic_family(delta: float, d: int = 8) -> Prior:
    """Four atoms around the uniform point with |x8-x6| = delta and |x4-x2| = delta**1.5."""
    x0 = np.full(d, 1.0 / d)
    eu = np.zeros(d)
    eu[3], eu[1] = 0.5, -0.5
    ev = np.zeros(d)
    ev[7], ev[5] = 0.5, -0.5
    u = delta ** 1.5
    atoms = [x0 + su * u * eu + sv * delta * ev for su in (1, -1) for sv in (1, -1)]
    return Prior.uniform(atoms)


def robust_gap(game: Game, prior: Prior, pi, radius: float, perturbations=None) -> float:
    """max over prior atoms x of the standard gap at a perturbed policy pi_x.

    With perturbations=None each pi_x is the policy within sup-distance radius of pi
    that makes the gap smallest (an LP per atom), which is the hardest case for a
    lower bound; otherwise perturbations[i] is used for atom i.
    """
    pi = np.asarray(pi, float)
    k = game.k
    best = -INF
    for i, x in enumerate(prior.atoms):
        c = game.loss @ x
        c = c - c.min()
        if perturbations is not None:
            val = float(np.asarray(perturbations[i], float) @ c)
        else:
            sol = linprog(c, A_eq=np.ones((1, k)), b_eq=[1.0],
                          lo=np.clip(pi - radius, 0.0, None), hi=np.minimum(pi + radius, 1.0))
            if not sol.optimal:
                raise RuntimeError(f"perturbation LP failed: {sol.status}")
            val = float(sol.value)
        best = max(best, val)
    return best


def exotic_coordinates(x):
    """(u, v) = (x4 - x2, x8 - x6) in one-based outcome numbering."""
    x = np.asarray(x, float)
    return float(x[3] - x[1]), float(x[7] - x[5])


def exotic_gap_closed_form(pi, x) -> float:
    """Gap of the 9x8 game up to constant factors, from the signs and sizes of u and v.

    Actions 8 and 9 always cost a constant. Playing 3 or 4 against the sign of u costs
    |u|, playing 1 or 2 against the sign of v costs |v|, and 5-7 pay both.
    """
    pi = np.asarray(pi, float)
    u, v = exotic_coordinates(x)
    mid = pi[4:7].sum()
    wrong_u = pi[3] if u >= 0 else pi[2]
    wrong_v = pi[1] if v >= 0 else pi[0]
    return float(pi[7] + pi[8] + abs(u) * (wrong_u + mid) + abs(v) * (wrong_v + mid))


def boundary_point(pieces: np.ndarray, a: int, b: int):
    """Point of the simplex where pieces a and b tie and are minimal, as deep inside as possible."""
    m, d = pieces.shape
    others = [g for g in range(m) if g not in (a, b)]
    # variables (x, t): max t s.t. x >= t, <v_g - v_a, x> >= t, <v_a - v_b, x> = 0
    rows = [np.hstack([-np.eye(d), np.ones((d, 1))])]
    for g in others:
        rows.append(np.concatenate([-(pieces[g] - pieces[a]), [1.0]])[None, :])
    A_ub = np.vstack(rows)
    A_eq = np.vstack([np.concatenate([np.ones(d), [0.0]]),
                      np.concatenate([pieces[a] - pieces[b], [0.0]])])
    sol = linprog(np.concatenate([np.zeros(d), [1.0]]), A_ub, np.zeros(len(A_ub)), A_eq, [1.0, 0.0],
                  lo=np.concatenate([np.zeros(d), [-INF]]), maximize=True)
    if not sol.optimal or sol.value <= 1e-9:
        return None, 0.0
    return sol.x[:d], float(sol.value)


def boundary_family(game: Game, mode: str, pair=None):
    """delta -> two-atom prior straddling the boundary between two cells."""
    pv = build_piecewise(game, mode)
    if pv.m < 2:
        x = np.full(game.d, 1.0 / game.d)
        return lambda delta: Prior.dirac(x)
    pairs = [pair] if pair else [(a, b) for a in range(pv.m) for b in range(a + 1, pv.m)]
    best = None
    for a, b in pairs:
        xb, depth = boundary_point(pv.pieces, a, b)
        if xb is not None and (best is None or depth > best[1]):
            best = (xb, depth, a, b)
    if best is None:
        raise ValueError("no shared boundary between cells")
    xb, depth, a, b = best
    direc = pv.pieces[a] - pv.pieces[b]
    direc = direc - direc.mean()
    direc = direc / np.abs(direc).sum()
    scale = depth / max(np.abs(direc).max(), 1e-12)

    def family(delta: float) -> Prior:
        step = min(delta, 0.5 * scale)
        return Prior.uniform([xb + step * direc, xb - step * direc])

    return family


def hard_family(game: Game, mode: str):
    if game.name == "exotic-9x8" and mode == "rustichini":
        return exotic_family
    return boundary_family(game, mode)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    lam: float
    value: float
    witnesses: list  # priors, best first


def _ratio(game, mode, prior, lam):
    try:
        return min_ratio(game, mode, prior, lam).ratio
    except RuntimeError:
        return 0.0


def minimax_sweep(game: Game, mode: str, lam: float, restarts: int = 8, steps: int = 20,
                  seed: int = 0, m_cap: int | None = None, deltas=(0.2, 0.05, 0.01)) -> SweepResult:
    """Lower estimate of the sup over priors of the minimal ratio."""
    rng = np.random.default_rng(seed)
    pv = build_piecewise(game, mode)
    m_cap = max(2, m_cap or pv.m)
    d = game.d
    candidates = []
    try:
        fam = hard_family(game, mode)
        candidates += [fam(dl) for dl in deltas]
    except ValueError:
        pass
    for _ in range(restarts):
        n_atoms = int(rng.integers(2, m_cap + 1))
        centre = rng.dirichlet(np.ones(d))
        spread = 10 ** rng.uniform(-3, -0.5)
        atoms = [np.clip(centre + spread * (rng.dirichlet(np.ones(d)) - 1.0 / d), 0, None) for _ in range(n_atoms)]
        atoms = [a / a.sum() for a in atoms]
        candidates.append(Prior(atoms, rng.dirichlet(np.ones(n_atoms))))
    scored = []
    for prior in candidates:
        val = _ratio(game, mode, prior, lam)
        if math.isinf(val):
            return SweepResult(lam, INF, [prior])
        scored.append((val, prior))
    scored.sort(key=lambda t: -t[0])
    # coordinate ascent from the best few starts
    improved = []
    for val, prior in scored[:3]:
        step = 0.05
        for _ in range(steps):
            atoms = prior.atoms.copy()
            w = prior.weights.copy()
            i = int(rng.integers(len(atoms)))
            if rng.random() < 0.8:
                dirn = rng.normal(size=d)
                dirn -= dirn.mean()
                atoms[i] = np.clip(atoms[i] + step * dirn / np.abs(dirn).sum(), 0, None)
                atoms[i] /= atoms[i].sum()
            else:
                w[i] *= math.exp(rng.normal(scale=0.5))
                w /= w.sum()
            try:
                cand = Prior(atoms, w)
            except ValueError:
                continue
            cv = _ratio(game, mode, cand, lam)
            if math.isinf(cv):
                return SweepResult(lam, INF, [cand])
            if cv > val:
                val, prior = cv, cand
            else:
                step *= 0.7
        improved.append((val, prior))
    allv = sorted(scored + improved, key=lambda t: -t[0])
    return SweepResult(lam, allv[0][0], [p for _, p in allv[:3]])


@dataclass
class LambdaVerdict:
    lam: float
    values: list
    slope: float
    verdict: str  # "bounded" | "diverging" | "inconclusive"


@dataclass
class LambdaStarEstimate:
    verdicts: list
    estimate: float
    bracket: tuple
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "bracket": list(self.bracket),
            "note": self.note,
            "per_lambda": [{"lambda": v.lam, "slope": v.slope, "verdict": v.verdict,
                            "values": v.values} for v in self.verdicts],
        }


DIVERGE_SLOPE = 0.1
BOUNDED_SLOPE = 0.05


def growth_slope(deltas, values) -> float:
    x = np.log(1.0 / np.asarray(deltas, float))
    y = np.log(np.asarray(values, float))
    return float(np.polyfit(x, y, 1)[0])


def lambda_star_estimate(game: Game, mode: str, lam_grid, family=None, deltas=None) -> LambdaStarEstimate:
    """Per-lambda growth verdicts of the minimal ratio along a shrinking-gap prior family."""
    lam_grid = sorted(float(l) for l in lam_grid)
    family = family or hard_family(game, mode)
    deltas = deltas if deltas is not None else [2.0 ** -j for j in range(4, 12)]
    priors = [family(dl) for dl in deltas]
    models = [PriorModel(game, mode, p) for p in priors]
    verdicts = []
    for lam in lam_grid:
        vals = [min_ratio(game, mode, p, lam, model=mdl).ratio for p, mdl in zip(priors, models)]
        if any(math.isinf(v) for v in vals):
            verdicts.append(LambdaVerdict(lam, vals, INF, "diverging"))
        elif all(v <= 1e-300 for v in vals):
            verdicts.append(LambdaVerdict(lam, vals, 0.0, "bounded"))
        elif any(v <= 1e-300 for v in vals):
            verdicts.append(LambdaVerdict(lam, vals, math.nan, "inconclusive"))
        else:
            s = growth_slope(deltas, vals)
            v = "diverging" if s > DIVERGE_SLOPE else "bounded" if s <= BOUNDED_SLOPE else "inconclusive"
            verdicts.append(LambdaVerdict(lam, vals, s, v))
    return _transition(verdicts)


def _transition(verdicts) -> LambdaStarEstimate:
    lams = [v.lam for v in verdicts]
    kinds = [v.verdict for v in verdicts]
    if all(k == "diverging" for k in kinds):
        return LambdaStarEstimate(verdicts, INF, (lams[-1], INF), "diverging on the whole grid")
    if all(k == "bounded" for k in kinds):
        if all(all(x == 0 for x in v.values) for v in verdicts):
            return LambdaStarEstimate(verdicts, 1.0, (1.0, lams[0]), "ratio identically zero")
        return LambdaStarEstimate(verdicts, lams[0], (1.0, lams[0]), "bounded on the whole grid")
    last_div = max((i for i, k in enumerate(kinds) if k == "diverging"), default=None)
    first_bd = min((i for i, k in enumerate(kinds) if k == "bounded"), default=None)
    if last_div is None:
        return LambdaStarEstimate(verdicts, lams[first_bd], (1.0, lams[first_bd]), "no diverging lambda")
    if first_bd is None:
        return LambdaStarEstimate(verdicts, INF, (lams[last_div], INF), "no bounded lambda")
    lo, hi = lams[last_div], lams[first_bd]
    s = [v.slope for v in verdicts]
    est = 0.5 * (lo + hi)
    # zero crossing of the fitted slope between neighbouring finite slopes
    for i in range(len(lams) - 1):
        a, b = s[i], s[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a > 0 >= b:
            est = lams[i] + (lams[i + 1] - lams[i]) * a / (a - b)
            break
    note = "" if first_bd > last_div else "non-monotone verdicts"
    return LambdaStarEstimate(verdicts, est, (lo, hi), note)
