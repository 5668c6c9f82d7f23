"""SCPR state spaces, legal moves, payoff q and transition laws Pr(s'|s,a¹,a²).

Two variants share one vocabulary:

* sequential positions (x¹,x²,x³,u): on u=1 only C₁ moves; on u=2 C₂ moves and
  then the robber moves, its law evaluated at (x¹,a²,x³);
* concurrent positions (x¹,x²,x³): all three tokens move at once, with
  en-passant sweeps.

Capture states always go to the absorbing terminal state τ.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix

from core.errors import IllegalActionError
from core.graph_core import Graph
from core.strategies import RobberStrategy, robber_move_distribution

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    SEQUENTIAL = "sequential"
    CONCURRENT = "concurrent"


class Terminal(Enum):
    TAU = "TAU"

    def __repr__(self):
        return "TAU"


class NullMove(Enum):
    LAMBDA = "λ"

    def __repr__(self):
        return "λ"


TAU = Terminal.TAU
LAMBDA = NullMove.LAMBDA


class SeqPosition(NamedTuple):
    x1: int
    x2: int
    x3: int
    u: int


class ConcPosition(NamedTuple):
    x1: int
    x2: int
    x3: int


SeqState = Union[SeqPosition, Terminal]
ConcState = Union[ConcPosition, Terminal]
State = Union[SeqPosition, ConcPosition, Terminal]
Action = Union[int, NullMove]


class StateClass(str, Enum):
    C1_CAPTURE = "C1Capture"
    C2_CAPTURE = "C2Capture"
    TERMINAL = "Terminal"
    ORDINARY = "Ordinary"


@dataclass(frozen=True)
class TransitionDistribution:
    outcomes: Tuple[Tuple[State, float], ...]

    def __iter__(self) -> Iterator[Tuple[State, float]]:
        return iter(self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)

    def as_dict(self) -> Dict[State, float]:
        return dict(self.outcomes)

    @classmethod
    def point(cls, state: State) -> "TransitionDistribution":
        return cls(((state, 1.0),))


@dataclass(frozen=True)
class StateSpace:
    variant: Variant
    vertex_count: int
    states: Tuple[State, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})

    def __len__(self) -> int:
        return len(self.states)

    def index(self, state: State) -> int:
        return self._index[state]

    @property
    def terminal_index(self) -> int:
        return len(self.states) - 1


def enumerate_states(g: Graph, variant: Variant | str) -> StateSpace:
    """Lexicographic positions then τ: 2n³+1 sequential states, n³+1 concurrent."""
    variant = Variant(variant)
    v = g.vertices
    if variant is Variant.SEQUENTIAL:
        states: List[State] = [SeqPosition(a, b, c, u) for a in v for b in v for c in v for u in (1, 2)]
    else:
        states = [ConcPosition(a, b, c) for a in v for b in v for c in v]
    states.append(TAU)
    return StateSpace(variant, g.vertex_count, tuple(states))


def classify(s: State) -> StateClass:
    if s is TAU:
        return StateClass.TERMINAL
    if s.x1 == s.x3:
        return StateClass.C1_CAPTURE
    if s.x2 == s.x3:
        return StateClass.C2_CAPTURE
    return StateClass.ORDINARY


def immediate_payoff(s: State) -> int:
    return 1 if classify(s) is StateClass.C1_CAPTURE else 0


def _variant_of(s: State, variant: Variant | str | None) -> Variant:
    if variant is not None:
        return Variant(variant)
    return Variant.SEQUENTIAL if isinstance(s, SeqPosition) else Variant.CONCURRENT


def legal_actions(g: Graph, s: State, player: int, variant: Variant | str | None = None) -> Tuple[Action, ...]:
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player}")
    if classify(s) is not StateClass.ORDINARY:
        return (LAMBDA,)
    own = s.x1 if player == 1 else s.x2
    if _variant_of(s, variant) is Variant.SEQUENTIAL and s.u != player:
        return (own,)
    return g.closed_neighborhood(own)


def _require_legal(g: Graph, s: State, player: int, a: Action) -> None:
    if a not in legal_actions(g, s, player):
        raise IllegalActionError(f"C{player} action {a!r} is not legal at state {s!r}")


def seq_transition(g: Graph, sigma3: RobberStrategy, s: SeqState, a: Action) -> TransitionDistribution:
    """Successor law after the acting cop (C_u) plays a."""
    if classify(s) is not StateClass.ORDINARY:
        if a is not LAMBDA:
            raise IllegalActionError(f"only the null move is legal at {s!r}, got {a!r}")
        return TransitionDistribution.point(TAU)
    _require_legal(g, s, s.u, a)
    x1, x2, x3, u = s
    if u == 1:
        return TransitionDistribution.point(SeqPosition(a, x2, x3, 2))
    if a == x3:
        # the robber is frozen when C₂ lands on it
        return TransitionDistribution.point(SeqPosition(x1, a, x3, 1))
    law = robber_move_distribution(sigma3, x1, a, x3)
    return TransitionDistribution(
        tuple((SeqPosition(x1, a, r, 1), p) for r, p in law.items() if p > 0)
    )


def resolve_concurrent(x1: int, x2: int, x3: int, a1: int, a2: int, r: int) -> int:
    """Robber's final vertex when C₁→a¹, C₂→a², R→r are played at once.

    A cop captures by landing on the robber's destination or by swapping an
    edge with it (the robber is swept into the cop's destination). If both cops
    capture in the same resolution, C₁ is credited.
    """
    if r == a1 or (a1 == x3 and r == x1):
        return a1
    if r == a2 or (a2 == x3 and r == x2):
        return a2
    return r


def conc_transition(g: Graph, sigma3: RobberStrategy, s: ConcState, a1: Action, a2: Action) -> TransitionDistribution:
    if classify(s) is not StateClass.ORDINARY:
        if a1 is not LAMBDA or a2 is not LAMBDA:
            raise IllegalActionError(f"only null moves are legal at {s!r}, got {a1!r}, {a2!r}")
        return TransitionDistribution.point(TAU)
    _require_legal(g, s, 1, a1)
    _require_legal(g, s, 2, a2)
    x1, x2, x3 = s
    merged: Dict[ConcPosition, float] = defaultdict(float)
    for r, p in robber_move_distribution(sigma3, x1, x2, x3).items():
        if p > 0:
            merged[ConcPosition(a1, a2, resolve_concurrent(x1, x2, x3, a1, a2, r))] += p
    return TransitionDistribution(tuple(sorted(merged.items())))


def transition(g: Graph, sigma3: RobberStrategy, s: State, a1: Action, a2: Action) -> TransitionDistribution:
    """Variant-agnostic entry point: in the sequential game the idle cop's action is ignored."""
    if isinstance(s, ConcPosition):
        return conc_transition(g, sigma3, s, a1, a2)
    if s is TAU or classify(s) is not StateClass.ORDINARY:
        return TransitionDistribution.point(TAU)
    return seq_transition(g, sigma3, s, a1 if s.u == 1 else a2)


# --- Compiled kernels ---

NULL_CODE = 0


def action_code(a: Action) -> int:
    return NULL_CODE if a is LAMBDA else int(a)


@dataclass(frozen=True)
class TransitionKernel:
    """Every (state, a¹, a²) triple as one row of a sparse stochastic matrix.

    Rows of state s are contiguous (offsets[s]:offsets[s+1]) in a¹-major,
    a²-minor order over the sorted legal action sets, so the block reshapes to
    the |A₁(s)|×|A₂(s)| one-turn payoff matrix.
    """

    space: StateSpace
    payoff: np.ndarray
    row_state: np.ndarray
    row_a1: np.ndarray
    row_a2: np.ndarray
    matrix: csr_matrix
    offsets: np.ndarray
    shape1: np.ndarray
    shape2: np.ndarray
    actions1: Tuple[Tuple[Action, ...], ...]
    actions2: Tuple[Tuple[Action, ...], ...]

    @property
    def variant(self) -> Variant:
        return self.space.variant

    def rows_of(self, s: int) -> slice:
        return slice(int(self.offsets[s]), int(self.offsets[s + 1]))

    def row_values(self, v: np.ndarray) -> np.ndarray:
        """q(s) + Σ Pr(s'|s,a¹,a²) v(s') for every row."""
        return self.payoff[self.row_state] + self.matrix @ v


def build_kernel(g: Graph, sigma3: RobberStrategy, variant: Variant | str) -> TransitionKernel:
    space = enumerate_states(g, variant)
    n_states = len(space)
    payoff = np.array([immediate_payoff(s) for s in space.states], dtype=float)

    row_state: List[int] = []
    row_a1: List[int] = []
    row_a2: List[int] = []
    data: List[float] = []
    cols: List[int] = []
    indptr = [0]
    offsets = np.zeros(n_states + 1, dtype=np.int64)
    shape1 = np.zeros(n_states, dtype=np.int64)
    shape2 = np.zeros(n_states, dtype=np.int64)
    actions1, actions2 = [], []

    for i, s in enumerate(space.states):
        acts1 = legal_actions(g, s, 1, space.variant)
        acts2 = legal_actions(g, s, 2, space.variant)
        actions1.append(acts1)
        actions2.append(acts2)
        shape1[i], shape2[i] = len(acts1), len(acts2)
        for a1 in acts1:
            for a2 in acts2:
                for succ, p in transition(g, sigma3, s, a1, a2):
                    cols.append(space.index(succ))
                    data.append(p)
                indptr.append(len(cols))
                row_state.append(i)
                row_a1.append(action_code(a1))
                row_a2.append(action_code(a2))
        offsets[i + 1] = len(row_state)

    matrix = csr_matrix(
        (np.array(data), np.array(cols, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(row_state), n_states),
    )
    logger.debug("compiled %s kernel: %d states, %d rows, %d transitions",
                 space.variant.value, n_states, len(row_state), len(data))
    return TransitionKernel(
        space=space,
        payoff=payoff,
        row_state=np.array(row_state, dtype=np.int64),
        row_a1=np.array(row_a1, dtype=np.int64),
        row_a2=np.array(row_a2, dtype=np.int64),
        matrix=matrix,
        offsets=offsets,
        shape1=shape1,
        shape2=shape2,
        actions1=tuple(actions1),
        actions2=tuple(actions2),
    )


def state_from_tuple(values: Sequence[int], variant: Variant | str) -> State:
    """(x1,x2,x3[,u]) -> position of the given variant."""
    variant = Variant(variant)
    if variant is Variant.SEQUENTIAL:
        if len(values) != 4:
            raise ValueError(f"sequential states need 4 coordinates, got {tuple(values)}")
        if values[3] not in (1, 2):
            raise ValueError(f"u must be 1 or 2, got {values[3]}")
        return SeqPosition(*map(int, values))
    if len(values) != 3:
        raise ValueError(f"concurrent states need 3 coordinates, got {tuple(values)}")
    return ConcPosition(*map(int, values))
