"""Value iteration for the sequential and concurrent SCPR games.

Both variants are positive games: iterating the optimality operator from the
immediate payoff q climbs monotonically to the value. Frozen cop policies are
folded into the compiled kernel, so best responses and policy evaluation run
through the same sweep loop.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix

from core.echo_bridge import IterationEcho
from core.errors import IllegalActionError, StrategyError
from core.graph_core import Graph
from core.strategies import CopPolicy, PolicyKind, RobberStrategy
from engines.game_engine import (
    Action,
    ConcPosition,
    SeqPosition,
    State,
    StateClass,
    StateSpace,
    TransitionKernel,
    Variant,
    build_kernel,
    classify,
    conc_transition,
    immediate_payoff,
    legal_actions,
    seq_transition,
)
from engines.matrix_game import MatrixGame, matrix_game_value, pure_saddle_point, solve_matrix_game

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ValueVector:
    """v(s) for every state index, plus how the iteration ended."""

    space: StateSpace
    values: np.ndarray
    iterations: int
    residual: float
    converged: bool
    echo: IterationEcho | None = None

    def __getitem__(self, state: State) -> float:
        return float(self.values[self.space.index(state)])

    def __len__(self) -> int:
        return len(self.values)

    def items(self):
        for s, v in zip(self.space.states, self.values):
            yield s, float(v)


@dataclass(frozen=True)
class SolveReport:
    values: ValueVector
    policy1: CopPolicy
    policy2: CopPolicy
    optimality_residual: float
    epsilon: float
    certified: bool = False

    @property
    def variant(self) -> Variant:
        return self.values.space.variant

    @property
    def converged(self) -> bool:
        return self.values.converged


def default_max_iter(space: StateSpace) -> int:
    return 10 * len(space)


def _check_params(tol: float, max_iter: int | None) -> None:
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter is not None and max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")


def _value_iteration(space: StateSpace, v0: np.ndarray, step: Callable[[np.ndarray], np.ndarray],
                     tol: float, max_iter: int | None, label: str) -> ValueVector:
    limit = max_iter or default_max_iter(space)
    echo = IterationEcho(label)
    v = v0.copy()
    residual = float("inf")
    iterations = 0
    converged = False
    for iterations in range(1, limit + 1):
        new = step(v)
        diff = new - v
        residual = float(np.max(np.abs(diff)))
        echo.pulse(iterations, residual, float(diff.min()), float(new.min()), float(new.max()))
        v = new
        logger.debug("%s sweep %d: residual %.3e", label, iterations, residual)
        if residual < tol:
            converged = True
            break
    if not converged:
        logger.warning("%s stopped at max_iter=%d with residual %.3e >= tol %.1e",
                       label, limit, residual, tol)
    return ValueVector(space, v, iterations, residual, converged, echo)


def _block_starts(offsets: np.ndarray) -> np.ndarray:
    return offsets[:-1]


def _turn_based_step(payoff: np.ndarray, row_state: np.ndarray, matrix: csr_matrix,
                     offsets: np.ndarray, maximize: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """max over the block where `maximize` is set, min elsewhere."""
    starts = _block_starts(offsets)
    row_payoff = payoff[row_state]

    def step(v: np.ndarray) -> np.ndarray:
        rows = row_payoff + matrix @ v
        return np.where(maximize, np.maximum.reduceat(rows, starts), np.minimum.reduceat(rows, starts))

    return step


def _kernel_step(kernel: TransitionKernel) -> Callable[[np.ndarray], np.ndarray]:
    base = _turn_based_step(kernel.payoff, kernel.row_state, kernel.matrix, kernel.offsets,
                            kernel.shape2 == 1)
    mixed = np.flatnonzero((kernel.shape1 > 1) & (kernel.shape2 > 1))
    if mixed.size == 0:
        return base

    def step(v: np.ndarray) -> np.ndarray:
        new = base(v)
        rows = kernel.row_values(v)
        for s in mixed:
            block = rows[kernel.rows_of(s)].reshape(kernel.shape1[s], kernel.shape2[s])
            new[s] = matrix_game_value(block)
        return new

    return step


def _q_block(kernel: TransitionKernel, rows: np.ndarray, s: int) -> np.ndarray:
    return rows[kernel.rows_of(s)].reshape(kernel.shape1[s], kernel.shape2[s])


def optimality_residual(kernel: TransitionKernel, values: np.ndarray) -> float:
    """sup |Φ(v) − v| for the optimality operator Φ of the kernel's game."""
    return float(np.max(np.abs(_kernel_step(kernel)(values) - values)))


def _triple(s: State) -> Tuple[int, int, int]:
    return (s.x1, s.x2, s.x3)


def _policy(player: int, moves: Dict[Tuple[int, int, int], Dict[int, float]]) -> CopPolicy:
    kind = PolicyKind.DETERMINISTIC if all(len(d) == 1 for d in moves.values()) else PolicyKind.MIXED
    return CopPolicy(player, kind, moves)


def _distribution(actions: Sequence[Action], weights: np.ndarray) -> Dict[int, float]:
    return {int(a): float(p) for a, p in zip(actions, weights) if p > 0}


# --- Sequential game ---

def solve_sequential(g: Graph, sigma3: RobberStrategy, tol: float = DEFAULT_TOL,
                     max_iter: int | None = None) -> SolveReport:
    _check_params(tol, max_iter)
    kernel = build_kernel(g, sigma3, Variant.SEQUENTIAL)
    logger.info("solving sequential game: n=%d, %d states", g.vertex_count, len(kernel.space))
    values = _value_iteration(kernel.space, kernel.payoff, _kernel_step(kernel), tol, max_iter, "sequential")
    policy1, policy2 = _extract_sequential(kernel, values.values, tol)
    residual = optimality_residual(kernel, values.values)
    logger.info("sequential solve done: %d iterations, residual %.3e, converged=%s",
                values.iterations, residual, values.converged)
    return SolveReport(values, policy1, policy2, residual, 10 * tol)


def _greedy_row(q: np.ndarray, maximize: bool) -> int:
    target = q.max() if maximize else q.min()
    close = np.abs(q - target) <= TIE_TOLERANCE
    return int(np.flatnonzero(close)[0])


def _extract_sequential(kernel: TransitionKernel, v: np.ndarray, tol: float) -> Tuple[CopPolicy, CopPolicy]:
    rows = kernel.row_values(v)
    states = kernel.space.states
    ordinary = np.array([classify(s) is StateClass.ORDINARY for s in states])
    mover = np.array([s.u if isinstance(s, SeqPosition) else 0 for s in states])
    is_max = ordinary & (mover == 1)
    is_min = ordinary & (mover == 2)

    moves2: Dict[Tuple[int, int, int], Dict[int, float]] = {}
    for s in np.flatnonzero(is_min):
        q = rows[kernel.rows_of(s)]
        a = kernel.actions2[s][_greedy_row(q, maximize=False)]
        moves2[_triple(states[s])] = {int(a): 1.0}

    chosen = _attractor_moves(kernel, rows, v, is_max, is_min, 10 * tol)
    moves1: Dict[Tuple[int, int, int], Dict[int, float]] = {}
    for s in np.flatnonzero(is_max):
        row = chosen.get(int(s))
        if row is None:
            row = _greedy_row(rows[kernel.rows_of(s)], maximize=True)
        moves1[_triple(states[s])] = {int(kernel.actions1[s][row]): 1.0}
    return _policy(1, moves1), _policy(2, moves2)


def _attractor_moves(kernel: TransitionKernel, rows: np.ndarray, v: np.ndarray,
                     is_max: np.ndarray, is_min: np.ndarray, eta: float) -> Dict[int, int]:
    """Value-preserving C₁ moves that make progress towards a C₁ capture.

    Rank 0 is the C₁-capture states. A C₁ state joins the next rank once one of
    its near-optimal moves reaches ranked states with positive probability; a
    C₂ state joins once all of C₂'s near-optimal moves do.
    """
    starts = _block_starts(kernel.offsets)
    sizes = np.diff(kernel.offsets)
    row_v = v[kernel.row_state]
    good = np.where(is_max[kernel.row_state], rows >= row_v - eta, rows <= row_v + eta)
    ranked = np.array([classify(s) is StateClass.C1_CAPTURE for s in kernel.space.states])
    chosen: Dict[int, int] = {}
    while True:
        reach = kernel.matrix @ ranked.astype(float) > 0
        hit = np.add.reduceat((good & reach).astype(np.int64), starts) > 0
        safe = np.add.reduceat((~good | reach).astype(np.int64), starts) == sizes
        joining = ~ranked & ((is_max & hit) | (is_min & safe))
        if not joining.any():
            return chosen
        for s in np.flatnonzero(joining & is_max):
            block = kernel.rows_of(s)
            chosen[int(s)] = int(np.flatnonzero(good[block] & reach[block])[0])
        ranked |= joining


# --- Concurrent game ---

def solve_concurrent(g: Graph, sigma3: RobberStrategy, tol: float = DEFAULT_TOL,
                     max_iter: int | None = None) -> SolveReport:
    _check_params(tol, max_iter)
    kernel = build_kernel(g, sigma3, Variant.CONCURRENT)
    logger.info("solving concurrent game: n=%d, %d states", g.vertex_count, len(kernel.space))
    values = _value_iteration(kernel.space, kernel.payoff, _kernel_step(kernel), tol, max_iter,
                              "concurrent")
    policy1, policy2 = _extract_concurrent(kernel, values, tol)
    residual = optimality_residual(kernel, values.values)
    logger.info("concurrent solve done: %d iterations, residual %.3e, converged=%s",
                values.iterations, residual, values.converged)
    return SolveReport(values, policy1, policy2, residual, 10 * tol)


def _row_strategy(block: np.ndarray) -> np.ndarray:
    game = MatrixGame(block)
    saddle = pure_saddle_point(game)
    if saddle is not None:
        return np.eye(game.rows)[saddle[0]]
    return solve_matrix_game(game).row_strategy


def _col_strategy(block: np.ndarray) -> np.ndarray:
    game = MatrixGame(block)
    saddle = pure_saddle_point(game)
    if saddle is not None:
        return np.eye(game.cols)[saddle[1]]
    return solve_matrix_game(game).col_strategy


def _extract_concurrent(kernel: TransitionKernel, values: ValueVector,
                        tol: float) -> Tuple[CopPolicy, CopPolicy]:
    """C₂ plays the column optimum at the final iterate. C₁ locks the row
    optimum of the first sweep k ≥ 1 that already reached v(s) − tol.

    The sweeps are replayed from v⁰ = q, so only the current iterate is held.
    """
    states = kernel.space.states
    final = values.values
    final_rows = kernel.row_values(final)
    ordinary = np.array([classify(state) is StateClass.ORDINARY for state in states])
    locked: Dict[int, Dict[int, float]] = {}
    moves2: Dict[Tuple[int, int, int], Dict[int, float]] = {}
    for s in np.flatnonzero(ordinary):
        moves2[_triple(states[s])] = _distribution(kernel.actions2[s], _col_strategy(_q_block(kernel, final_rows, s)))

    step = _kernel_step(kernel)
    pending = ordinary.copy()
    v = kernel.payoff.copy()
    for sweep in range(1, values.iterations + 1):
        new = final if sweep == values.iterations else step(v)
        locking = pending & (new >= final - tol)
        if locking.any():
            rows = kernel.row_values(v)
            for s in np.flatnonzero(locking):
                locked[int(s)] = _distribution(kernel.actions1[s], _row_strategy(_q_block(kernel, rows, s)))
            pending &= ~locking
        if not pending.any():
            break
        v = new
    moves1 = {_triple(states[s]): locked[s] for s in sorted(locked)}
    return _policy(1, moves1), _policy(2, moves2)


def one_turn_matrix(g: Graph, sigma3: RobberStrategy, values: ValueVector, s: ConcPosition,
                    row_actions: Sequence[int] | None = None,
                    col_actions: Sequence[int] | None = None) -> Tuple[Tuple[Action, ...], Tuple[Action, ...], np.ndarray]:
    """Γ[a¹,a²] = q(s) + Σ Pr(s′|s,a¹,a²) v(s′) at a concurrent state."""
    rows = tuple(row_actions) if row_actions is not None else legal_actions(g, s, 1, Variant.CONCURRENT)
    cols = tuple(col_actions) if col_actions is not None else legal_actions(g, s, 2, Variant.CONCURRENT)
    q = immediate_payoff(s)
    matrix = np.array([
        [q + sum(p * values[succ] for succ, p in conc_transition(g, sigma3, s, a1, a2)) for a2 in cols]
        for a1 in rows
    ])
    return rows, cols, matrix


def sequential_one_turn_matrix(g: Graph, sigma3: RobberStrategy, values: ValueVector,
                               s: SeqPosition) -> Tuple[Tuple[Action, ...], Tuple[Action, ...], np.ndarray]:
    """The sequential one-turn game: a single column at u=1, a single row at u=2."""
    rows = legal_actions(g, s, 1, Variant.SEQUENTIAL)
    cols = legal_actions(g, s, 2, Variant.SEQUENTIAL)
    q = immediate_payoff(s)

    def entry(a1: Action, a2: Action) -> float:
        acting = a1 if classify(s) is not StateClass.ORDINARY or s.u == 1 else a2
        return q + sum(p * values[succ] for succ, p in seq_transition(g, sigma3, s, acting))

    return rows, cols, np.array([[entry(a1, a2) for a2 in cols] for a1 in rows])


# --- Frozen policies ---

def _fixed_weights(kernel: TransitionKernel, s: int, policy: CopPolicy) -> List[Tuple[int, float]]:
    """(index into the player's action list, probability) for a frozen player."""
    actions = kernel.actions1[s] if policy.player == 1 else kernel.actions2[s]
    if len(actions) == 1:
        return [(0, 1.0)]
    state = kernel.space.states[s]
    weights = []
    for a, p in policy.distribution(*_triple(state)).items():
        if p <= 0:
            continue
        if a not in actions:
            raise IllegalActionError(f"C{policy.player} policy plays {a} at {state!r}, legal: {actions}")
        weights.append((actions.index(a), p))
    return weights


def _fold(kernel: TransitionKernel, policy1: CopPolicy | None,
          policy2: CopPolicy | None) -> Tuple[csr_matrix, np.ndarray, np.ndarray]:
    """Mixes frozen players' rows into one row per free action (or per state)."""
    w_rows: List[int] = []
    w_cols: List[int] = []
    w_data: List[float] = []
    row_state: List[int] = []
    offsets = [0]
    for s in range(len(kernel.space)):
        s1, s2 = int(kernel.shape1[s]), int(kernel.shape2[s])
        base = int(kernel.offsets[s])
        mix1 = _fixed_weights(kernel, s, policy1) if policy1 is not None else [(i, 1.0) for i in range(s1)]
        mix2 = _fixed_weights(kernel, s, policy2) if policy2 is not None else [(j, 1.0) for j in range(s2)]
        if policy1 is not None and policy2 is not None:
            groups = [[(i * s2 + j, p1 * p2) for i, p1 in mix1 for j, p2 in mix2]]
        elif policy1 is not None:
            groups = [[(i * s2 + j, p1) for i, p1 in mix1] for j in range(s2)]
        else:
            groups = [[(i * s2 + j, p2) for j, p2 in mix2] for i in range(s1)]
        for group in groups:
            for offset, p in group:
                w_rows.append(len(row_state))
                w_cols.append(base + offset)
                w_data.append(p)
            row_state.append(s)
        offsets.append(len(row_state))
    weights = csr_matrix((w_data, (w_rows, w_cols)), shape=(len(row_state), kernel.matrix.shape[0]))
    return (weights @ kernel.matrix).tocsr(), np.array(row_state, dtype=np.int64), np.array(offsets, dtype=np.int64)


def _check_policy_player(policy: CopPolicy, player: int) -> None:
    if policy.player != player:
        raise StrategyError(f"expected a C{player} policy, got one for C{policy.player}")


def best_response(g: Graph, sigma3: RobberStrategy, fixed: CopPolicy, variant: Variant | str,
                  tol: float = DEFAULT_TOL, max_iter: int | None = None) -> ValueVector:
    """sup over C₁ when C₂ is frozen, inf over C₂ when C₁ is frozen."""
    _check_params(tol, max_iter)
    kernel = build_kernel(g, sigma3, variant)
    if fixed.player == 1:
        matrix, row_state, offsets = _fold(kernel, fixed, None)
    else:
        matrix, row_state, offsets = _fold(kernel, None, fixed)
    maximize = np.full(len(kernel.space), fixed.player == 2)
    step = _turn_based_step(kernel.payoff, row_state, matrix, offsets, maximize)
    label = f"best response to C{fixed.player}"
    return _value_iteration(kernel.space, kernel.payoff, step, tol, max_iter, label)


def evaluate_policies(g: Graph, sigma3: RobberStrategy, policy1: CopPolicy, policy2: CopPolicy,
                      variant: Variant | str, tol: float = DEFAULT_TOL,
                      max_iter: int | None = None) -> ValueVector:
    """C₁'s win probability J(π₁, π₂ | s) for every start s."""
    _check_params(tol, max_iter)
    _check_policy_player(policy1, 1)
    _check_policy_player(policy2, 2)
    kernel = build_kernel(g, sigma3, variant)
    matrix, row_state, _ = _fold(kernel, policy1, policy2)
    row_payoff = kernel.payoff[row_state]

    def step(v: np.ndarray) -> np.ndarray:
        return row_payoff + matrix @ v

    return _value_iteration(kernel.space, kernel.payoff, step, tol, max_iter, "policy evaluation")


def certify(g: Graph, sigma3: RobberStrategy, report: SolveReport, tol: float = DEFAULT_TOL,
            max_iter: int | None = None) -> SolveReport:
    """Replaces the nominal ε with one measured against both players' best responses."""
    v = report.values.values
    br_vs_c2 = best_response(g, sigma3, report.policy2, report.variant, tol, max_iter)
    br_vs_c1 = best_response(g, sigma3, report.policy1, report.variant, tol, max_iter)
    epsilon = max(0.0, float(np.max(br_vs_c2.values - v)), float(np.max(v - br_vs_c1.values)))
    logger.info("certified epsilon %.3e", epsilon)
    return replace(report, epsilon=epsilon, certified=True)


def solve(g: Graph, sigma3: RobberStrategy, variant: Variant | str, tol: float = DEFAULT_TOL,
          max_iter: int | None = None) -> SolveReport:
    if Variant(variant) is Variant.SEQUENTIAL:
        return solve_sequential(g, sigma3, tol, max_iter)
    return solve_concurrent(g, sigma3, tol, max_iter)
