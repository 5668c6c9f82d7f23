"""Monte Carlo play-out of SCPR episodes under fixed cop policies."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Mapping, Tuple

import numpy as np

from core.errors import InputError
from core.graph_core import Graph
from core.strategies import CopPolicy, RobberStrategy
from engines.game_engine import (
    ConcPosition,
    SeqPosition,
    State,
    StateClass,
    classify,
    conc_transition,
    seq_transition,
)

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class Outcome(str, Enum):
    C1_WINS = "C1"
    C2_WINS = "C2"
    TRUNCATED = "TRUNC"


@dataclass(frozen=True)
class EpisodeTrace:
    states: Tuple[State, ...]
    outcome: Outcome

    @property
    def length(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True)
class Estimate:
    mean: float
    standard_error: float
    episodes: int
    truncated_fraction: float


def splitmix64(x: int) -> int:
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def episode_seed(master_seed: int, index: int) -> int:
    """Seed of episode `index`, a pure function of (master_seed, index)."""
    return splitmix64(master_seed + (index + 1) * GOLDEN_GAMMA)


def default_horizon(g: Graph) -> int:
    return 4 * g.vertex_count ** 2


def _sample(rng: np.random.Generator, dist: Mapping) -> object:
    """Inverse-CDF draw over the support in sorted order."""
    items = sorted(dist.items())
    u = rng.random()
    acc = 0.0
    for outcome, p in items:
        acc += p
        if u < acc:
            return outcome
    return items[-1][0]


def _terminal_outcome(s: State) -> Outcome | None:
    kind = classify(s)
    if kind is StateClass.C1_CAPTURE:
        return Outcome.C1_WINS
    if kind is StateClass.C2_CAPTURE:
        return Outcome.C2_WINS
    return None


class EpisodeRunner:
    """Plays episodes of one instance; holds the graph, robber law and both policies."""

    def __init__(self, g: Graph, sigma3: RobberStrategy, policy1: CopPolicy, policy2: CopPolicy):
        self.g = g
        self.sigma3 = sigma3
        self.policy1 = policy1
        self.policy2 = policy2

    def _step(self, s: State, rng: np.random.Generator) -> State:
        triple = (s.x1, s.x2, s.x3)
        if isinstance(s, SeqPosition):
            policy = self.policy1 if s.u == 1 else self.policy2
            action = _sample(rng, policy.distribution(*triple))
            return _sample(rng, seq_transition(self.g, self.sigma3, s, action).as_dict())
        a1 = _sample(rng, self.policy1.distribution(*triple))
        a2 = _sample(rng, self.policy2.distribution(*triple))
        return _sample(rng, conc_transition(self.g, self.sigma3, s, a1, a2).as_dict())

    def play(self, start: State, horizon: int, seed: int) -> EpisodeTrace:
        if not isinstance(start, (SeqPosition, ConcPosition)):
            raise InputError(f"episodes start from a position, got {start!r}")
        if horizon < 1:
            raise InputError(f"horizon must be >= 1, got {horizon}")
        for x in (start.x1, start.x2, start.x3):
            self.g.check_vertex(x)
        rng = np.random.default_rng(seed)
        states: List[State] = [start]
        outcome = _terminal_outcome(start)
        while outcome is None and len(states) <= horizon:
            states.append(self._step(states[-1], rng))
            outcome = _terminal_outcome(states[-1])
        return EpisodeTrace(tuple(states), outcome or Outcome.TRUNCATED)


def play_episode(g: Graph, sigma3: RobberStrategy, policy1: CopPolicy, policy2: CopPolicy,
                 start: State, horizon: int | None = None, seed: int = 0) -> EpisodeTrace:
    return EpisodeRunner(g, sigma3, policy1, policy2).play(start, horizon or default_horizon(g), seed)


def _play_batch(args) -> List[Outcome]:
    runner, start, horizon, master_seed, indices = args
    return [runner.play(start, horizon, episode_seed(master_seed, i)).outcome for i in indices]


def _chunks(episodes: int, parts: int) -> List[range]:
    size = math.ceil(episodes / parts)
    return [range(lo, min(lo + size, episodes)) for lo in range(0, episodes, size)]


def estimate_value(g: Graph, sigma3: RobberStrategy, policy1: CopPolicy, policy2: CopPolicy,
                   start: State, episodes: int, horizon: int | None = None,
                   master_seed: int = 0, workers: int = 1) -> Estimate:
    """Fraction of episodes won by C₁; truncated episodes count as losses."""
    if episodes < 1:
        raise InputError(f"episodes must be >= 1, got {episodes}")
    horizon = horizon or default_horizon(g)
    runner = EpisodeRunner(g, sigma3, policy1, policy2)
    batches = [(runner, start, horizon, master_seed, r) for r in _chunks(episodes, max(1, workers))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = [o for batch in pool.map(_play_batch, batches) for o in batch]
    else:
        outcomes = [o for batch in map(_play_batch, batches) for o in batch]

    wins = sum(o is Outcome.C1_WINS for o in outcomes)
    truncated = sum(o is Outcome.TRUNCATED for o in outcomes)
    mean = wins / episodes
    estimate = Estimate(
        mean=mean,
        standard_error=math.sqrt(mean * (1.0 - mean) / episodes),
        episodes=episodes,
        truncated_fraction=truncated / episodes,
    )
    logger.info("estimated %.6f ± %.6f over %d episodes (%.4f truncated)",
                estimate.mean, estimate.standard_error, episodes, estimate.truncated_fraction)
    return estimate


def dump_trace(trace: EpisodeTrace) -> str:
    lines = [f"{t} " + " ".join(str(x) for x in s) for t, s in enumerate(trace.states)]
    lines.append(f"outcome {trace.outcome.value}")
    return "\n".join(lines) + "\n"


def replay_is_legal(g: Graph, sigma3: RobberStrategy, trace: EpisodeTrace) -> bool:
    """True iff every consecutive pair is reachable with positive probability for some cop actions."""
    for s, nxt in zip(trace.states, trace.states[1:]):
        if isinstance(s, SeqPosition):
            own = s.x1 if s.u == 1 else s.x2
            options = [seq_transition(g, sigma3, s, a).as_dict() for a in g.closed_neighborhood(own)]
        else:
            options = [conc_transition(g, sigma3, s, a1, a2).as_dict()
                       for a1 in g.closed_neighborhood(s.x1) for a2 in g.closed_neighborhood(s.x2)]
        if not any(d.get(nxt, 0.0) > 0 for d in options):
            return False
    return True
