"""Command-line front end: analyze, ratio, run, slope and catalog list."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .game import CATALOG_NAMES, GameFormatError, resolve_game
from .info import lambda_star_estimate, minimax_sweep
from .sim import ENVS, LEARNERS, SweepTable, sweep
from .value import MODES, build_piecewise, cell_complex, classify_actions, value_star

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INCONCLUSIVE = 0, 2, 3, 4
CSV_COLUMNS = ["game", "mode", "learner", "env", "n", "seed", "regret_standard",
               "regret_rustichini", "wallclock_ms", "status"]


class InputError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return None if math.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "w", newline="") as f:
        f.write(text)
    os.replace(tmp, path)


def _emit(obj, out: str | None) -> None:
    text = json.dumps(_jsonable(obj), indent=2) + "\n"
    if out:
        _write_atomic(Path(out), text)
    else:
        sys.stdout.write(text)


def _load(ref: str):
    try:
        return resolve_game(ref)
    except (GameFormatError, OSError, ValueError) as e:
        raise InputError(str(e)) from None


def _parse_list(text, kind=float, what="list"):
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).replace(" ", "").split(",") if t]
    try:
        out = []
        for item in items:
            if kind is int and isinstance(item, str) and ".." in item:
                lo, hi = item.split("..")
                if "^" in lo and "^" in hi:
                    # 2^10..2^13 steps through exponents, not through every integer
                    (b1, e1), (b2, e2) = lo.split("^"), hi.split("^")
                    if b1 != b2:
                        raise ValueError("power range needs one base")
                    out.extend(int(b1) ** e for e in range(int(e1), int(e2) + 1))
                else:
                    out.extend(range(int(lo), int(hi) + 1))
            elif kind is int and isinstance(item, str) and "^" in item:
                base, exp = item.split("^")
                out.append(int(base) ** int(exp))
            else:
                out.append(kind(item))
        return out
    except ValueError:
        raise InputError(f"cannot parse {what} {text!r}") from None


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    game = _load(args.game)
    pv = build_piecewise(game, args.mode)
    cx = cell_complex(pv)
    classes = classify_actions(game)
    centre = np.full(game.d, 1.0 / game.d)
    report = {
        "game": game.name,
        "mode": args.mode,
        "k": game.k,
        "d": game.d,
        "value_at_uniform": value_star(game, args.mode, centre),
        "pieces": pv.pieces,
        "cells": [{"piece": int(alpha), "vertices": P.vertices()} for alpha, P in cx.cells],
        "actions": [{"action": a + 1, "class": lab,
                     "cell_dim": dim} for a, (lab, dim) in enumerate(zip(classes.labels, classes.cell_dims))],
        "globally_observable": classes.globally_observable,
        "pairs": classes.to_dict()["pairs"],
    }
    _emit(report, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# ratio
# ---------------------------------------------------------------------------

def cmd_ratio(args) -> int:
    game = _load(args.game)
    grid = _parse_list(args.lambda_grid, float, "lambda grid")
    if not grid or min(grid) <= 1.0:
        raise InputError("lambda grid values must be > 1")
    budget = int(args.budget)
    sweeps = [minimax_sweep(game, args.mode, lam, restarts=budget) for lam in grid]
    est = lambda_star_estimate(game, args.mode, grid)
    report = {
        "game": game.name,
        "mode": args.mode,
        "lambda_grid": grid,
        "sweep": [{"lambda": s.lam, "value": s.value, "witnesses": [p.to_dict() for p in s.witnesses]}
                  for s in sweeps],
        "lambda_star": est.to_dict(),
    }
    _emit(report, args.out)
    inconclusive = not math.isfinite(est.estimate) and any(v.verdict == "inconclusive" for v in est.verdicts)
    return EXIT_INCONCLUSIVE if inconclusive or est.note == "non-monotone verdicts" else EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _run_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config {args.config}: {e}") from None
    for key in ("game", "mode", "horizons", "seeds", "out"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.learner:
        cfg["learner"] = {**cfg.get("learner", {}), "name": args.learner}
    if args.env:
        cfg["env"] = {**cfg.get("env", {}), "kind": args.env}
    missing = [k for k in ("game", "learner", "env", "horizons", "seeds", "out") if k not in cfg]
    if missing:
        raise InputError(f"run needs {', '.join(missing)} (flags or --config)")
    cfg.setdefault("mode", "standard")
    if cfg["mode"] not in MODES:
        raise InputError(f"mode must be one of {', '.join(MODES)}")
    if isinstance(cfg["learner"], str):
        cfg["learner"] = {"name": cfg["learner"]}
    if isinstance(cfg["env"], str):
        cfg["env"] = {"kind": cfg["env"]}
    if cfg["learner"].get("name") not in LEARNERS:
        raise InputError(f"unknown learner {cfg['learner'].get('name')!r}")
    if cfg["env"].get("kind") not in ENVS:
        raise InputError(f"unknown env {cfg['env'].get('kind')!r}")
    cfg["horizons"] = sorted(_parse_list(cfg["horizons"], int, "horizons"))
    cfg["seeds"] = _parse_list(cfg["seeds"], int, "seeds")
    if not cfg["horizons"] or not cfg["seeds"]:
        raise InputError("need at least one horizon and one seed")
    return cfg


def table_to_csv(table: SweepTable) -> str:
    import io
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in table.rows:
        w.writerow({k: (repr(float(row[k])) if k.startswith("regret") or k == "wallclock_ms" else row[k])
                    for k in CSV_COLUMNS})
    return buf.getvalue()


def read_csv(path) -> SweepTable:
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_COLUMNS:
            raise InputError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        for r in reader:
            try:
                r["n"], r["seed"] = int(r["n"]), int(r["seed"])
                for key in ("regret_standard", "regret_rustichini", "wallclock_ms"):
                    r[key] = float(r[key])
            except ValueError as e:
                raise InputError(f"{path}: bad row {r}: {e}") from None
            rows.append(r)
    return SweepTable(rows)


def summarize(table: SweepTable, mode: str) -> dict:
    return {
        "mode": mode,
        "cells": len(table.rows),
        "failed": sum(r["status"] != "ok" for r in table.rows),
        "horizons": [{"n": n, "mean_regret": mean, "stderr": se, "seeds": cnt}
                     for n, mean, se, cnt in table.summary(mode)],
    }


def cmd_run(args) -> int:
    cfg = _run_config(args)
    game = _load(cfg["game"])
    m = build_piecewise(game, cfg["mode"]).m
    if cfg["horizons"][0] < m:
        raise InputError(f"horizon {cfg['horizons'][0]} is below the piece count {m}")
    table = sweep(cfg["game"], cfg["mode"], cfg["learner"], cfg["env"], cfg["horizons"], cfg["seeds"])
    out = Path(cfg["out"])
    _write_atomic(out, table_to_csv(table))
    summary = {"config": cfg, **summarize(table, cfg["mode"])}
    _write_atomic(out.with_suffix(".json"), json.dumps(_jsonable(summary), indent=2) + "\n")
    sys.stdout.write(json.dumps(_jsonable(summary["horizons"])) + "\n")
    return EXIT_OK if summary["failed"] == 0 else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# slope
# ---------------------------------------------------------------------------

@dataclass
class SlopeFit:
    slope: float
    interval: tuple
    horizons: list
    residuals: list

    def to_dict(self) -> dict:
        return {"slope": self.slope, "ci95": list(self.interval), "horizons": self.horizons,
                "residuals": self.residuals}


def fit_slope(horizons, mean_regret, use_all: bool = False) -> SlopeFit:
    """OLS of log mean regret on log n with a heteroskedasticity-robust 95% interval."""
    import statsmodels.api as sm
    pts = sorted((int(n), float(r)) for n, r in zip(horizons, mean_regret) if r > 0 and math.isfinite(r))
    if not use_all:
        pts = pts[len(pts) // 2:]
    if len(pts) < 4:
        raise InputError(f"slope fit needs at least 4 horizons with positive regret, got {len(pts)}")
    x = np.log([n for n, _ in pts])
    y = np.log([r for _, r in pts])
    res = sm.OLS(y, sm.add_constant(x)).fit(cov_type="HC1", use_t=True)
    lo, hi = res.conf_int(alpha=0.05)[1]
    return SlopeFit(float(res.params[1]), (float(lo), float(hi)), [n for n, _ in pts],
                    [float(v) for v in res.resid])


def cmd_slope(args) -> int:
    table = read_csv(args.csv)
    modes = {r["mode"] for r in table.rows}
    mode = args.mode or (modes.pop() if len(modes) == 1 else None)
    if mode is None:
        raise InputError("csv mixes modes; pass --mode")
    summary = table.summary(mode)
    fit = fit_slope([s[0] for s in summary], [s[1] for s in summary], use_all=args.all_horizons)
    _emit({"mode": mode, **fit.to_dict()}, args.out)
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.action != "list":
        raise InputError(f"unknown catalog action {args.action!r}")
    for name in CATALOG_NAMES:
        print(name)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmlab", description="Partial-monitoring analysis and regret experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, game_required=True):
        sp.add_argument("--game", required=game_required, help="catalog name or path to a game JSON file")
        sp.add_argument("--mode", choices=MODES, default=None if not game_required else "standard")
        sp.add_argument("--out", help="output path (stdout when omitted)")

    a = sub.add_parser("analyze", help="pieces, cells, action classes and estimators")
    common(a)
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("ratio", help="information-ratio sweep and lambda-star verdicts")
    common(r)
    r.add_argument("--lambda-grid", default="1.5,2,2.5,3")
    r.add_argument("--budget", type=int, default=8, help="random restarts of the prior sweep")
    r.set_defaults(func=cmd_ratio)

    u = sub.add_parser("run", help="seeded regret sweep, written as CSV plus a JSON summary")
    u.add_argument("--config", help="JSON experiment config; flags override its fields")
    u.add_argument("--game")
    u.add_argument("--mode", choices=MODES)
    u.add_argument("--learner", choices=LEARNERS)
    u.add_argument("--env", choices=ENVS)
    u.add_argument("--horizons", help="comma list; 2^k and a..b forms allowed")
    u.add_argument("--seeds", help="comma list or a..b")
    u.add_argument("--out", help="CSV path; the summary goes next to it with a .json suffix")
    u.set_defaults(func=cmd_run)

    s = sub.add_parser("slope", help="fit the regret exponent from a run CSV")
    s.add_argument("csv")
    s.add_argument("--mode", choices=MODES)
    s.add_argument("--all-horizons", action="store_true", help="fit every horizon, not only the top half")
    s.add_argument("--out")
    s.set_defaults(func=cmd_slope)

    c = sub.add_parser("catalog", help="built-in games")
    c.add_argument("action", choices=["list"])
    c.set_defaults(func=cmd_catalog)
    return p


def _fail(code: int, kind: str, msg: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": msg}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as e:
        return _fail(EXIT_INPUT, "input", str(e))
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as e:
        return _fail(EXIT_NUMERIC, "numerical", str(e))
    except ValueError as e:
        return _fail(EXIT_INPUT, "input", str(e))
    except Exception as e:  # anything else is an analysis failure, still reported as JSON
        return _fail(EXIT_NUMERIC, "numerical", f"{type(e).__name__}: {e}")


if __name__ == "__main__":
    sys.exit(main())
