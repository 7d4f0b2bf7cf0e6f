"""Finite two-player zero-sum games in strategic form.

Payoffs are always stored from the row player's point of view.  In the GANG
setting the row player is the generator and the column player the classifier;
the column player's payoff is the negation of the stored entry.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PROB_TOL = 1e-9

ROW = "row"
COL = "col"


class GameError(ValueError):
    """Invalid game data or mismatched dimensions."""


@dataclass(frozen=True)
class PayoffMatrix:
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise GameError(f"payoff matrix must be a non-empty 2-d array, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise GameError("payoff matrix has non-finite entries")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def payoffs_for(self, player: str) -> np.ndarray:
        """Payoff table of ``player`` with that player's strategies on axis 0."""
        if player == ROW:
            return self.entries
        if player == COL:
            return -self.entries.T
        raise GameError(f"unknown player {player!r}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            for row in self.entries:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "PayoffMatrix":
        text = Path(path).read_text()
        rows = []
        for line_no, row in enumerate(csv.reader(text.splitlines()), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise GameError(f"line {line_no}: {exc}") from None
        if not rows:
            raise GameError("empty matrix file")
        if len({len(r) for r in rows}) != 1:
            raise GameError("ragged matrix: rows have different lengths")
        return cls(np.array(rows))


@dataclass(frozen=True)
class MixedStrategy:
    """Probability vector over one player's pure strategies.

    Vectors whose sum is within ``PROB_TOL`` of one are renormalized; anything
    else (negative entries, bad sums) is rejected.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if probs.size == 0:
            raise GameError("mixed strategy must have at least one entry")
        if not np.all(np.isfinite(probs)):
            raise GameError("mixed strategy has non-finite entries")
        if np.any(probs < -PROB_TOL):
            raise GameError(f"negative probability {probs.min()}")
        total = probs.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise GameError(f"probabilities sum to {total!r}, not 1")
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return self.probs.size

    @classmethod
    def pure(cls, n: int, index: int) -> "MixedStrategy":
        probs = np.zeros(n)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, n: int) -> "MixedStrategy":
        return cls(np.full(n, 1.0 / n))

    def support(self, tol: float = 0.0) -> np.ndarray:
        return np.flatnonzero(self.probs > tol)


@dataclass(frozen=True)
class StrategyProfile:
    row: MixedStrategy
    col: MixedStrategy


def _check_profile(U: PayoffMatrix, profile: StrategyProfile) -> None:
    if len(profile.row) != U.rows or len(profile.col) != U.cols:
        raise GameError(
            f"profile dims ({len(profile.row)}, {len(profile.col)}) "
            f"do not match matrix ({U.rows}, {U.cols})")


def expected_payoff(U: PayoffMatrix, profile: StrategyProfile) -> float:
    """Row player's expected payoff; the column player receives the negation."""
    _check_profile(U, profile)
    return float(profile.row.probs @ U.entries @ profile.col.probs)


def best_pure_response(U: PayoffMatrix, opponent: MixedStrategy, player: str) -> tuple[int, float]:
    """Pure strategy of ``player`` maximizing its payoff against ``opponent``.

    Returns ``(index, value)`` with ties going to the lowest index.
    """
    table = U.payoffs_for(player)
    if len(opponent) != table.shape[1]:
        raise GameError(
            f"opponent strategy has {len(opponent)} entries, expected {table.shape[1]}")
    values = table @ opponent.probs
    index = int(np.argmax(values))
    return index, float(values[index])


def epsilon_of_profile(U: PayoffMatrix, profile: StrategyProfile) -> float:
    """Largest gain either player can get from a unilateral pure deviation."""
    v = expected_payoff(U, profile)
    _, best_row = best_pure_response(U, profile.col, ROW)
    _, best_col = best_pure_response(U, profile.row, COL)
    return max(best_row - v, best_col + v)
