"""Finite two-player zero-sum matrix games: the Val[·] operator.

The row player maximises. Entries are shifted to be strictly positive, the
column player's LP

    maximise 1ᵀy  subject to  B y ≤ 1,  y ≥ 0

is solved with a dense simplex tableau (Bland's rule), and the row player's
strategy is read off the slack reduced costs of the final tableau.
"""

from dataclasses import dataclass

import numpy as np

GUARANTEE_TOLERANCE = 1e-9
PIVOT_EPS = 1e-12


@dataclass(frozen=True)
class MatrixGame:
    payoff: np.ndarray

    def __post_init__(self):
        payoff = np.array(self.payoff, dtype=float)
        if payoff.ndim != 2 or payoff.shape[0] < 1 or payoff.shape[1] < 1:
            raise ValueError(f"matrix game needs a non-empty 2-d payoff, got shape {payoff.shape}")
        if not np.all(np.isfinite(payoff)):
            raise ValueError("matrix game payoff has non-finite entries")
        payoff.setflags(write=False)
        object.__setattr__(self, "payoff", payoff)

    @property
    def rows(self) -> int:
        return self.payoff.shape[0]

    @property
    def cols(self) -> int:
        return self.payoff.shape[1]


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray

    def row_guarantee(self, game: MatrixGame) -> float:
        return float(np.min(self.row_strategy @ game.payoff))

    def col_guarantee(self, game: MatrixGame) -> float:
        return float(np.max(game.payoff @ self.col_strategy))


def pure_saddle_point(game: MatrixGame) -> tuple[int, int] | None:
    """Lowest-index (i, j) with Γ[i,j] = max_i min_j Γ = min_j max_i Γ, if one exists."""
    a = game.payoff
    row_mins = a.min(axis=1)
    col_maxs = a.max(axis=0)
    lower, upper = row_mins.max(), col_maxs.min()
    if lower != upper:
        return None
    for i in np.flatnonzero(row_mins == lower):
        for j in np.flatnonzero(a[i] == lower):
            if col_maxs[j] == upper:
                return int(i), int(j)
    return None


def solve_matrix_game(game: MatrixGame) -> MatrixGameSolution:
    a = game.payoff
    m, k = a.shape

    if k == 1:
        i = int(np.argmax(a[:, 0]))
        return MatrixGameSolution(float(a[i, 0]), _unit(m, i), _unit(1, 0))
    if m == 1:
        j = int(np.argmin(a[0]))
        return MatrixGameSolution(float(a[0, j]), _unit(1, 0), _unit(k, j))

    shift = 1.0 - a.min()
    b = a + shift
    y, x, total = _simplex_max_ones(b)
    value = 1.0 / total - shift
    row = _clean(x)
    col = _clean(y)
    return MatrixGameSolution(float(value), row, col)


def _simplex_max_ones(b: np.ndarray):
    """Maximise 1ᵀy s.t. b y ≤ 1, y ≥ 0 for strictly positive b.

    Returns (primal y, dual x, optimum). Bland's rule: the entering column is the
    lowest-index one with a negative reduced cost; ratio ties leave by the lowest
    basic variable index.
    """
    m, k = b.shape
    tableau = np.zeros((m + 1, k + m + 1))
    tableau[:m, :k] = b
    tableau[:m, k:k + m] = np.eye(m)
    tableau[:m, -1] = 1.0
    tableau[m, :k] = -1.0
    basis = np.arange(k, k + m)

    # Bland's rule terminates; the bound only guards against float pathologies
    for _ in range(50 * (m + k) + 100):
        reduced = tableau[m, :-1]
        entering = np.flatnonzero(reduced < -PIVOT_EPS)
        if entering.size == 0:
            break
        col = int(entering[0])
        column = tableau[:m, col]
        candidates = np.flatnonzero(column > PIVOT_EPS)
        # bounded: b > 0 so every column has a positive entry
        ratios = tableau[candidates, -1] / column[candidates]
        best = ratios.min()
        tied = candidates[np.abs(ratios - best) <= PIVOT_EPS * max(1.0, abs(best))]
        row = int(tied[np.argmin(basis[tied])])
        tableau[row] /= tableau[row, col]
        for r in range(m + 1):
            if r != row and tableau[r, col] != 0.0:
                tableau[r] -= tableau[r, col] * tableau[row]
        basis[row] = col
    else:
        raise RuntimeError("simplex failed to terminate")

    y = np.zeros(k + m)
    y[basis] = tableau[:m, -1]
    x = tableau[m, k:k + m].copy()
    return y[:k], x, float(tableau[m, -1])


def _clean(weights: np.ndarray) -> np.ndarray:
    w = np.clip(weights, 0.0, None)
    return w / w.sum()


def _unit(size: int, index: int) -> np.ndarray:
    e = np.zeros(size)
    e[index] = 1.0
    return e


def matrix_game_value(payoff: np.ndarray) -> float:
    """Val[Γ] with a pure-saddle fast path."""
    game = MatrixGame(payoff)
    saddle = pure_saddle_point(game)
    if saddle is not None:
        return float(game.payoff[saddle])
    return solve_matrix_game(game).value
