"""Concurrent SCPR against an oblivious deterministic robber.

Each cop's problem decouples into a single-cop chase of a robber that follows
a fixed map σ̄: V → V. The capture-time table T(x, y) (cop at x, robber at y)
is the fixed point of

    T(x, x) = 0,    T(x, y) = 1 + min_{x′ ∈ N[x]} T(x′, σ̄(y)),

and the cop that can capture no later than the other wins.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.errors import StrategyError
from core.graph_core import Graph
from core.strategies import CopPolicy, PolicyKind, RobberKind, RobberStrategy
from engines.game_engine import (
    ConcPosition,
    StateClass,
    Variant,
    build_kernel,
    classify,
    enumerate_states,
)
from engines.solvers import SolveReport, ValueVector, one_turn_matrix, optimality_residual

logger = logging.getLogger(__name__)

INFINITY = np.inf


@dataclass(frozen=True)
class CaptureTimeTable:
    """times[x-1, y-1] is T*(x, y) (np.inf if never); moves[x-1, y-1] the cop's next vertex."""

    times: np.ndarray
    moves: np.ndarray
    rounds: int

    def time(self, cop: int, robber: int) -> float:
        return float(self.times[cop - 1, robber - 1])

    def move(self, cop: int, robber: int) -> int:
        return int(self.moves[cop - 1, robber - 1])


def _robber_map(g: Graph, sigma3: RobberStrategy) -> np.ndarray:
    if sigma3.kind is not RobberKind.OBLIVIOUS:
        raise StrategyError(
            f"capture-time analysis needs an oblivious deterministic robber, got {sigma3.kind.value}"
        )
    return np.array([sigma3.oblivious_move(x) for x in g.vertices]) - 1


def oblivious_capture_times(g: Graph, sigma3: RobberStrategy) -> CaptureTimeTable:
    sigma = _robber_map(g, sigma3)
    n = g.vertex_count
    reach = g.closed_mask
    times = np.full((n, n), INFINITY)
    np.fill_diagonal(times, 0.0)
    moves = np.tile(np.arange(n), (n, 1)).T.copy()
    rounds = 0
    while True:
        # after[x′, y] = T(x′, σ̄(y)); candidate[x, x′, y] restricts x′ to N[x]
        after = times[:, sigma]
        candidate = np.where(reach[:, :, None], after[None, :, :], INFINITY)
        best = candidate.argmin(axis=1)
        updated = 1.0 + candidate.min(axis=1)
        np.fill_diagonal(updated, 0.0)
        if np.array_equal(updated, times):
            moves = np.where(np.isfinite(times), best, moves)
            break
        times = updated
        rounds += 1
    np.fill_diagonal(moves, np.arange(n))
    logger.debug("capture times stabilised after %d rounds", rounds)
    return CaptureTimeTable(times, moves + 1, rounds)


def policy_capture_time(g: Graph, sigma3: RobberStrategy, table: CaptureTimeTable,
                        cop: int, robber: int) -> float:
    """Turns until the table's chase policy catches the robber; np.inf if it never does."""
    g.check_vertex(cop)
    g.check_vertex(robber)
    # the (cop, robber) pair has n² values, so a capture-free run that long is a cycle
    for t in range(g.vertex_count ** 2 + 1):
        if cop == robber:
            return float(t)
        step = table.move(cop, robber)
        dest = sigma3.oblivious_move(robber)
        if step == dest or (step == robber and dest == cop):
            return float(t + 1)
        cop, robber = step, dest
    return INFINITY


def solve_oblivious_concurrent(g: Graph, sigma3: RobberStrategy) -> SolveReport:
    """0/1 values and pure optimal chase policies from the capture-time race."""
    table = oblivious_capture_times(g, sigma3)
    space = enumerate_states(g, Variant.CONCURRENT)
    values = np.zeros(len(space))
    moves1, moves2 = {}, {}
    for i, s in enumerate(space.states):
        kind = classify(s)
        if kind is StateClass.C1_CAPTURE:
            values[i] = 1.0
        if kind is not StateClass.ORDINARY:
            continue
        t1, t2 = table.time(s.x1, s.x3), table.time(s.x2, s.x3)
        values[i] = 1.0 if np.isfinite(t1) and t1 <= t2 else 0.0
        moves1[(s.x1, s.x2, s.x3)] = {table.move(s.x1, s.x3): 1.0}
        moves2[(s.x1, s.x2, s.x3)] = {table.move(s.x2, s.x3): 1.0}

    kernel = build_kernel(g, sigma3, Variant.CONCURRENT)
    residual = optimality_residual(kernel, values)
    if residual > 0:
        logger.warning("capture-time values miss the optimality equations by %.3e", residual)
    vector = ValueVector(space, values, table.rounds, 0.0, True)
    return SolveReport(
        vector,
        CopPolicy(1, PolicyKind.DETERMINISTIC, moves1),
        CopPolicy(2, PolicyKind.DETERMINISTIC, moves2),
        residual,
        0.0,
    )


def pure_minimax_gap(g: Graph, sigma3: RobberStrategy, values: ValueVector,
                     s: ConcPosition) -> tuple[float, float]:
    """(max-min, min-max) of the one-turn game at s over pure actions."""
    if not sigma3.is_deterministic:
        raise StrategyError("pure minimax comparison needs a deterministic robber")
    _, _, matrix = one_turn_matrix(g, sigma3, values, s)
    return float(matrix.min(axis=1).max()), float(matrix.max(axis=0).min())


def verify_pure_minimax(g: Graph, sigma3: RobberStrategy, values: ValueVector) -> float:
    """Largest deviation of either pure ordering of the one-turn game from v(s)."""
    _robber_map(g, sigma3)
    worst = 0.0
    for s, v in values.items():
        if classify(s) is StateClass.TERMINAL:
            continue
        maxmin, minmax = pure_minimax_gap(g, sigma3, values, s)
        worst = max(worst, abs(maxmin - v), abs(minmax - v))
    return worst
