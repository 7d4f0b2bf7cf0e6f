"""Finite generative adversarial network games solved with Parallel Nash Memory."""

from gangs.game import (
    MixedStrategy,
    PayoffMatrix,
    StrategyProfile,
    best_pure_response,
    epsilon_of_profile,
    expected_payoff,
)
from gangs.lp import GameSolution, solve_zero_sum

__version__ = "0.1.0"

__all__ = [
    "GameSolution",
    "MixedStrategy",
    "PayoffMatrix",
    "StrategyProfile",
    "best_pure_response",
    "epsilon_of_profile",
    "expected_payoff",
    "solve_zero_sum",
]
