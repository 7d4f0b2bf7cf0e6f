"""Independent reference computations used only by the tests."""

import itertools

import numpy as np


def double_sum_payoff(U, row, col):
    total = 0.0
    for i in range(len(row)):
        for j in range(len(col)):
            total += row[i] * col[j] * U[i][j]
    return total


def equalizer_2x2(U):
    """Closed-form mixed solution of a 2x2 game without a saddle point."""
    (a, b), (c, d) = U
    denom = a - b - c + d
    p = (d - c) / denom
    q = (d - b) / denom
    v = (a * d - b * c) / denom
    return (p, 1 - p), (q, 1 - q), v


def support_enumeration_value(U, tol=1e-9):
    """Value and one equilibrium of a zero-sum game by brute-force support enumeration.

    Only equal-size supports are tried, which is enough for nondegenerate
    games such as matrices with continuous random entries.
    """
    U = np.asarray(U, dtype=float)
    m, n = U.shape
    for k in range(1, min(m, n) + 1):
        for I in itertools.combinations(range(m), k):
            for J in itertools.combinations(range(n), k):
                sub = U[np.ix_(I, J)]
                # unknowns (q_J, v): sub q - v = 0, sum q = 1
                M = np.zeros((k + 1, k + 1))
                M[:k, :k] = sub
                M[:k, k] = -1.0
                M[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    qv = np.linalg.solve(M, rhs)
                    M2 = np.zeros((k + 1, k + 1))
                    M2[:k, :k] = sub.T
                    M2[:k, k] = -1.0
                    M2[k, :k] = 1.0
                    pv = np.linalg.solve(M2, rhs)
                except np.linalg.LinAlgError:
                    continue
                q, v = qv[:k], qv[k]
                p, v2 = pv[:k], pv[k]
                if np.any(q < -tol) or np.any(p < -tol) or abs(v - v2) > 1e-7:
                    continue
                row = np.zeros(m)
                row[list(I)] = p
                col = np.zeros(n)
                col[list(J)] = q
                if (U @ col).max() <= v + 1e-7 and (row @ U).min() >= v - 1e-7:
                    return v, row, col
    raise ValueError("no equilibrium found with equal-size supports")


def central_difference(f, x, h=1e-5):
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        old = x[i]
        x[i] = old + h
        up = f(x)
        x[i] = old - h
        down = f(x)
        x[i] = old
        grad[i] = (up - down) / (2 * h)
    return grad


def max_relative_error(analytic, numeric, abs_floor=1e-7):
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    # entries whose absolute error is below the floor count as exact
    rel = np.where(diff < abs_floor, 0.0, diff / np.maximum(scale, 1e-300))
    return float(rel.max()) if rel.size else 0.0
