"""Exact solution of zero-sum matrix games by linear programming.

The payoff matrix ``U`` is shifted to ``A = U - min(U) + 1`` so that every
entry is at least one and the game value is positive.  The column player's
problem then becomes

    maximize    sum(y)
    subject to  A y <= 1,  y >= 0

whose origin is feasible, so a single simplex phase suffices.  At the optimum
``col = y / sum(y)``, the row strategy is read off the dual (the reduced costs
of the slack columns) and ``value = 1 / sum(y) - shift``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gangs.game import MixedStrategy, PayoffMatrix

PIVOT_TOL = 1e-10
OPT_TOL = 1e-9


class SimplexError(RuntimeError):
    pass


@dataclass(frozen=True)
class GameSolution:
    row_strategy: MixedStrategy
    col_strategy: MixedStrategy
    value: float


def _simplex_bland(A: np.ndarray, max_pivots: int | None = None) -> list[int]:
    """Run the tableau simplex on ``max 1'y, Ay <= 1, y >= 0``.

    Returns the final basis as column indices into ``[A | I]``.  Entering and
    leaving variables follow Bland's rule, so the method cannot cycle.
    """
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = list(range(n, n + m))
    if max_pivots is None:
        max_pivots = 50 * (n + m) ** 2

    for _ in range(max_pivots):
        reduced = T[m, :-1]
        candidates = np.flatnonzero(reduced < -OPT_TOL)
        if candidates.size == 0:
            return basis
        enter = int(candidates[0])

        column = T[:m, enter]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            raise SimplexError("unbounded LP; cannot happen for a shifted payoff matrix")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        leave = int(min(tied, key=lambda r: basis[r]))

        T[leave] /= T[leave, enter]
        for r in range(m + 1):
            if r != leave and T[r, enter] != 0.0:
                T[r] -= T[r, enter] * T[leave]
        basis[leave] = enter
    raise SimplexError(f"simplex did not terminate within {max_pivots} pivots")


def _strategy(weights: np.ndarray) -> MixedStrategy:
    weights = np.clip(weights, 0.0, None)
    return MixedStrategy(weights / weights.sum())


def solve_zero_sum(U: PayoffMatrix) -> GameSolution:
    """Maximin row strategy, minimax column strategy and the value of ``U``."""
    if not isinstance(U, PayoffMatrix):
        U = PayoffMatrix(U)
    entries = U.entries
    if U.rows == 1 and U.cols == 1:
        return GameSolution(MixedStrategy([1.0]), MixedStrategy([1.0]), float(entries[0, 0]))

    shift = 1.0 - entries.min()
    A = entries + shift
    m, n = A.shape
    basis = _simplex_bland(A)

    # Re-solve the final basis directly; this removes the rounding that
    # accumulates over a long pivot sequence.
    full = np.hstack([A, np.eye(m)])
    B = full[:, basis]
    y_basic = np.linalg.solve(B, np.ones(m))
    cost = np.array([1.0 if j < n else 0.0 for j in basis])
    x = np.linalg.solve(B.T, cost)

    y = np.zeros(n + m)
    y[basis] = y_basic
    y = y[:n]
    total = np.clip(y, 0.0, None).sum()
    if not total > 0.0:
        raise SimplexError("degenerate optimum with empty column support")
    return GameSolution(
        row_strategy=_strategy(x),
        col_strategy=_strategy(y),
        value=float(1.0 / total - shift),
    )
