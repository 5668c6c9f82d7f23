"""IterationEcho - pulse store for value-iteration sweeps."""

from dataclasses import dataclass, field
from typing import List


@dataclass(frozen=True)
class IterationPulse:
    iteration: int
    residual: float
    min_increment: float
    lowest: float
    highest: float


@dataclass
class IterationEcho:
    """Stores one pulse per sweep so callers can audit a finished solve."""

    label: str = ""
    pulses: List[IterationPulse] = field(default_factory=list)

    def pulse(self, iteration: int, residual: float, min_increment: float,
              lowest: float, highest: float) -> None:
        self.pulses.append(IterationPulse(iteration, residual, min_increment, lowest, highest))

    def query(self, iteration: int) -> IterationPulse | None:
        for p in self.pulses:
            if p.iteration == iteration:
                return p
        return None

    def is_monotone(self, slack: float = 1e-12) -> bool:
        """True iff no sweep decreased any component and all iterates stayed in [0,1]."""
        return all(
            p.min_increment >= -slack and p.lowest >= -slack and p.highest <= 1 + slack
            for p in self.pulses
        )
