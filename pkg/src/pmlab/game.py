"""Finite partial-monitoring games, latent distributions, priors and the catalog."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .numerics import Polytope

SIMPLEX_TOL = 1e-9


class GameFormatError(ValueError):
    """Raised when a game file or catalog name cannot be turned into a Game."""


def _canonical_symbols(signal_rows):
    flat = [s for row in signal_rows for s in row]
    seen = list(dict.fromkeys(flat))
    try:
        labels = sorted(seen)
    except TypeError:
        labels = seen
    index = {s: i for i, s in enumerate(labels)}
    codes = np.array([[index[s] for s in row] for row in signal_rows], dtype=np.int64)
    return codes, tuple(labels)


@dataclass(eq=False)
class Game:
    """Loss matrix (k x d) and signal matrix with symbols recoded to 0..|Sigma|-1."""

    loss: np.ndarray
    signal: np.ndarray
    name: str = ""
    labels: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        loss = np.array(self.loss, dtype=float)
        if loss.ndim != 2:
            raise GameFormatError("loss must be a k x d matrix")
        if not np.all(np.isfinite(loss)):
            r, c = np.argwhere(~np.isfinite(loss))[0]
            raise GameFormatError(f"loss row {r + 1} column {c + 1} is not finite")
        sig = np.asarray(self.signal)
        if sig.shape != loss.shape:
            raise GameFormatError(f"signal shape {sig.shape} differs from loss shape {loss.shape}")
        if sig.dtype.kind not in "iu" or not self.labels:
            codes, labels = _canonical_symbols(sig.tolist())
            if not self.labels:
                self.labels = labels
            else:
                self.labels = tuple(self.labels[int(i)] for i in labels)
        else:
            codes = sig.astype(np.int64)
            used = np.unique(codes)
            if not np.array_equal(used, np.arange(used.size)):
                codes, lab = _canonical_symbols(codes.tolist())
                self.labels = tuple(self.labels[i] for i in lab)
            else:
                self.labels = tuple(self.labels[: used.size])
        loss.setflags(write=False)
        codes.setflags(write=False)
        self.loss = loss
        self.signal = codes

    @property
    def k(self) -> int:
        return self.loss.shape[0]

    @property
    def d(self) -> int:
        return self.loss.shape[1]

    @property
    def n_symbols(self) -> int:
        return len(self.labels)

    def signal_indicator(self) -> np.ndarray:
        """(k * |Sigma|) x d 0/1 matrix; row a*|Sigma|+s marks outcomes with signal s under a."""
        if "S_full" not in self._cache:
            ns = self.n_symbols
            S = np.zeros((self.k * ns, self.d))
            for a in range(self.k):
                S[a * ns + self.signal[a], np.arange(self.d)] = 1.0
            S.setflags(write=False)
            self._cache["S_full"] = S
        return self._cache["S_full"]

    def signal_basis(self) -> np.ndarray:
        """Linearly independent rows spanning the indicator rows, starting with the all-ones row."""
        if "S_red" not in self._cache:
            rows = [np.ones(self.d)]
            for r in self.signal_indicator():
                cand = np.vstack(rows + [r])
                if np.linalg.matrix_rank(cand, tol=1e-9) == len(rows) + 1:
                    rows.append(r)
            S = np.array(rows)
            S.setflags(write=False)
            self._cache["S_red"] = S
        return self._cache["S_red"]

    def injective_signals(self) -> bool:
        return self.signal_basis().shape[0] == self.d

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "k": self.k,
            "d": self.d,
            "loss": self.loss.tolist(),
            "signal": [[self.labels[s] for s in row] for row in self.signal.tolist()],
        }

    def checksum(self) -> str:
        import hashlib
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.loss).tobytes())
        h.update(np.ascontiguousarray(self.signal).tobytes())
        return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

def as_simplex_point(x, size: int, what: str = "distribution") -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != size:
        raise ValueError(f"{what} has length {x.size}, expected {size}")
    if not np.all(np.isfinite(x)) or x.min() < -SIMPLEX_TOL or abs(x.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"{what} is not a probability vector: {x}")
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def random_simplex(rng: np.random.Generator, d: int, size=None, alpha: float = 1.0):
    return rng.dirichlet(np.full(d, alpha), size=size)


@dataclass(eq=False)
class Prior:
    """Finitely supported measure on the simplex; duplicate atoms are merged."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape[0] != w.size:
            raise ValueError("one weight per atom required")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("prior weights must be positive and sum to 1")
        atoms = np.array([as_simplex_point(a, atoms.shape[1], "atom") for a in atoms])
        keep_a, keep_w = [], []
        for a, wi in zip(atoms, w):
            for j, b in enumerate(keep_a):
                if np.max(np.abs(a - b)) <= 1e-10:
                    keep_w[j] += wi
                    break
            else:
                keep_a.append(a)
                keep_w.append(wi)
        self.atoms = np.array(keep_a)
        self.weights = np.array(keep_w) / np.sum(keep_w)

    @classmethod
    def dirac(cls, x) -> "Prior":
        return cls(np.atleast_2d(x), [1.0])

    @classmethod
    def uniform(cls, atoms) -> "Prior":
        atoms = np.atleast_2d(atoms)
        return cls(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    def mixture(self) -> np.ndarray:
        return self.weights @ self.atoms

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}


# ---------------------------------------------------------------------------
# signals and R-classes
# ---------------------------------------------------------------------------

def signal_law(game: Game, a: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.bincount(game.signal[a], weights=x, minlength=game.n_symbols)


def signal_laws(game: Game, x) -> np.ndarray:
    """k x |Sigma| matrix of signal laws for every action."""
    ns = game.n_symbols
    return (game.signal_indicator() @ np.asarray(x, dtype=float)).reshape(game.k, ns)


def equivalence_polytope(game: Game, x) -> Polytope:
    """Points of the simplex inducing the same signal law as x under every action."""
    x = np.asarray(x, dtype=float)
    S = game.signal_basis()[1:]
    return Polytope.simplex(game.d, extra_eq=S, extra_beq=S @ x)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _parse_number(v, where: str) -> float:
    if isinstance(v, bool):
        raise GameFormatError(f"{where}: boolean is not a loss value")
    if isinstance(v, (int, float)):
        val = float(v)
    elif isinstance(v, str):
        try:
            val = float(Fraction(v.strip()))
        except (ValueError, ZeroDivisionError):
            raise GameFormatError(f"{where}: cannot parse {v!r} as a number") from None
    else:
        raise GameFormatError(f"{where}: expected a number, got {type(v).__name__}")
    if not math.isfinite(val):
        raise GameFormatError(f"{where}: loss must be finite")
    return val


def game_from_dict(data: dict) -> Game:
    if not isinstance(data, dict):
        raise GameFormatError("game file must contain a JSON object")
    for key in ("k", "d", "loss", "signal"):
        if key not in data:
            raise GameFormatError(f"missing field {key!r}")
    k, d = data["k"], data["d"]
    if not (isinstance(k, int) and isinstance(d, int)) or k < 1 or d < 1:
        raise GameFormatError("k and d must be positive integers")
    name = data.get("name", "")
    if not isinstance(name, str):
        raise GameFormatError("name must be a string")
    mats = {}
    for key in ("loss", "signal"):
        rows = data[key]
        if not isinstance(rows, list) or len(rows) != k:
            raise GameFormatError(f"{key} must have k={k} rows")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != d:
                got = len(row) if isinstance(row, list) else type(row).__name__
                raise GameFormatError(f"{key} row {i + 1} has {got} entries, expected d={d}")
        mats[key] = rows
    loss = [[_parse_number(v, f"loss row {i + 1} column {j + 1}") for j, v in enumerate(row)]
            for i, row in enumerate(mats["loss"])]
    for i, row in enumerate(mats["signal"]):
        for j, s in enumerate(row):
            if isinstance(s, bool) or not isinstance(s, (str, int)):
                raise GameFormatError(f"signal row {i + 1} column {j + 1}: symbols must be str or int")
    return Game(np.array(loss), mats["signal"], name=name)


def load_game(path) -> Game:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise GameFormatError(f"cannot read {path}: {e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GameFormatError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    return game_from_dict(data)


def save_game(game: Game, path) -> None:
    Path(path).write_text(json.dumps(game.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8")


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def matching_pennies_dark() -> Game:
    return Game(np.eye(2), [["⊥", "⊥"], ["⊥", "⊥"]], name="matching-pennies-dark")


def exotic_9x8() -> Game:
    q = 0.25
    loss = [
        [1, 0, 0, 0, 1, 1, 0, 0],
        [1, 0, 0, 0, 1, 0, 0, 1],
        [1, 1, 0, 0, 1, 0, 0, 0],
        [1, 0, 0, 1, 1, 0, 0, 0],
        [1, q, 0, q, 1, q, 0, q],
        [1, q, 0, q, 1, q, 0, q],
        [1, q, 0, q, 1, q, 0, q],
        [2] * 8,
        [2] * 8,
    ]
    signal = [[0] * 8] * 4 + [
        [1, 1, 0, 0, 0, 0, 0, 0],
        [0, 1, 1, 0, 0, 0, 0, 0],
        [1, 1, 1, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 1, 0, 0],
        [0, 0, 0, 0, 0, 1, 1, 0],
    ]
    return Game(np.array(loss, dtype=float), signal, name="exotic-9x8")


def degenerate_4x4() -> Game:
    loss = [[1, 0, 2, 2], [0, 1, 2, 2], [2, 2, 2, 2], [2, 2, 2, 2]]
    signal = [[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 1, 0], [0, 1, 1, 0]]
    return Game(np.array(loss, dtype=float), signal, name="degenerate-4x4")


def g_alpha(alpha: int, p: float) -> Game:
    """Two actions, 2*alpha-1 outcomes; losses alternate between 0 and alpha**-p.

    Action 1 sees floor(i/2)+1 on (1-based) outcome i, action 2 sees ceil(i/2),
    so each action's signal pairs up neighbouring outcomes with a one-step offset.
    """
    if int(alpha) != alpha or alpha < 1:
        raise GameFormatError(f"g-alpha needs an integer alpha >= 1, got {alpha}")
    if not 0.0 < p < 1.0:
        raise GameFormatError(f"g-alpha needs p in (0, 1), got {p}")
    alpha = int(alpha)
    d = 2 * alpha - 1
    s = alpha ** (-p)
    i = np.arange(1, d + 1)
    loss = np.vstack([np.where(i % 2 == 0, s, 0.0), np.where(i % 2 == 1, s, 0.0)])
    signal = np.vstack([i // 2 + 1, (i + 1) // 2])
    labels = tuple(range(1, alpha + 1))
    return Game(loss, (signal - 1).astype(np.int64), name=f"g-alpha({alpha},{p:g})", labels=labels)


def g_alpha_estimator(alpha: int, p: float) -> np.ndarray:
    """2 x alpha table g[a-1, sigma-1] whose signal-sum reproduces the loss difference."""
    a = np.arange(1, 3)[:, None]
    sig = np.arange(1, alpha + 1)[None, :]
    return alpha ** (-p) * (a + 2 * (sig - 1)) * (-1.0) ** (a + 2 * sig - 1)


def bandit_2xn(n: int) -> Game:
    """Two-armed Bernoulli-style bandit with M loss levels per arm (N = M*M outcomes)."""
    M = int(round(math.sqrt(n)))
    if M * M != n or M < 2:
        raise GameFormatError(f"bandit-2xN needs N a perfect square >= 4, got {n}")
    i, j = np.divmod(np.arange(n), M)
    lv = np.linspace(0.0, 1.0, M)
    loss = np.vstack([lv[i], lv[j]])
    return Game(loss, np.vstack([i, j]), name=f"bandit-2x{n}")


def full_info_2xn(n: int) -> Game:
    """Two actions with opposite losses; every action reveals the outcome."""
    if n < 2:
        raise GameFormatError(f"full-info-2xN needs N >= 2, got {n}")
    z = np.arange(n) / (n - 1)
    return Game(np.vstack([z, 1.0 - z]), np.vstack([np.arange(n), np.arange(n)]),
                name=f"full-info-2x{n}")


CATALOG_NAMES = (
    "matching-pennies-dark",
    "exotic-9x8",
    "degenerate-4x4",
    "g-alpha(ALPHA,P)",
    "bandit-2xN",
    "full-info-2xN",
)


def catalog(name: str) -> Game:
    name = name.strip()
    fixed = {
        "matching-pennies-dark": matching_pennies_dark,
        "exotic-9x8": exotic_9x8,
        "degenerate-4x4": degenerate_4x4,
    }
    if name in fixed:
        return fixed[name]()
    m = re.fullmatch(r"g-alpha\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)", name)
    if m:
        try:
            alpha, p = float(m.group(1)), float(m.group(2))
        except ValueError:
            raise GameFormatError(f"bad g-alpha parameters in {name!r}") from None
        return g_alpha(alpha, p)
    m = re.fullmatch(r"(bandit|full-info)-2x(\d+)", name)
    if m:
        n = int(m.group(2))
        return bandit_2xn(n) if m.group(1) == "bandit" else full_info_2xn(n)
    raise GameFormatError(f"unknown catalog game {name!r}; known: {', '.join(CATALOG_NAMES)}")


def resolve_game(ref: str) -> Game:
    """Catalog name or path to a JSON file."""
    p = Path(ref)
    if p.suffix == ".json" or p.exists():
        return load_game(p)
    return catalog(ref)
