"""Finite partial-monitoring games: value functions, information ratios, learners and regret experiments."""

from .game import Game, Prior, catalog, load_game, resolve_game
from .value import build_piecewise, optimal_policy, value, value_star

__version__ = "0.1.0"

__all__ = ["Game", "Prior", "catalog", "load_game", "resolve_game", "build_piecewise",
           "optimal_policy", "value", "value_star", "__version__"]
