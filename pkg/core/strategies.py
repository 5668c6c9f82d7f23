"""Robber strategies σ₃ and cop policies, with their line-oriented text formats."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Dict, List, Mapping, Tuple

from core.errors import ParseError, StrategyError
from core.graph_core import Graph

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-12

Triple = Tuple[int, int, int]
Distribution = Mapping[int, float]


class RobberKind(str, Enum):
    OBLIVIOUS = "oblivious"
    STATE = "state"
    MARKOV = "markov"


class PolicyKind(str, Enum):
    DETERMINISTIC = "deterministic"
    MIXED = "mixed"


def _frozen(mapping: dict) -> Mapping:
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True)
class RobberStrategy:
    """Fixed, publicly known robber law. Unlisted states mean "stay"."""

    kind: RobberKind
    oblivious_map: Mapping[int, int] = field(default_factory=dict)
    state_map: Mapping[Triple, int] = field(default_factory=dict)
    distribution_map: Mapping[Triple, Distribution] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "oblivious_map", _frozen(self.oblivious_map))
        object.__setattr__(self, "state_map", _frozen(self.state_map))
        object.__setattr__(
            self,
            "distribution_map",
            _frozen({k: _frozen(dict(sorted(d.items()))) for k, d in self.distribution_map.items()}),
        )

    def __reduce__(self):
        # MappingProxyType does not pickle; rebuild from plain dicts
        return (
            RobberStrategy,
            (
                self.kind,
                dict(self.oblivious_map),
                dict(self.state_map),
                {k: dict(d) for k, d in self.distribution_map.items()},
            ),
        )

    def validate(self, g: Graph) -> "RobberStrategy":
        """Raises StrategyError unless every entry is a legal move on g and every law sums to 1.

        The constructor does not check; loaders and callers building tables in code call this.
        """
        for x3, dest in self.oblivious_map.items():
            _check_entry(g, (x3, x3, x3), dest)
        for triple, dest in self.state_map.items():
            _check_entry(g, triple, dest)
        for triple, dist in self.distribution_map.items():
            if not dist:
                raise StrategyError(f"empty distribution at state {triple}")
            for dest, p in dist.items():
                if not 0.0 < p <= 1.0:
                    raise StrategyError(f"probability {p!r} at state {triple} outside (0, 1]")
                _check_entry(g, triple, dest)
            _check_sum(str(triple), dist)
        return self

    @property
    def is_deterministic(self) -> bool:
        return self.kind in (RobberKind.OBLIVIOUS, RobberKind.STATE)

    def oblivious_move(self, x3: int) -> int:
        if self.kind is not RobberKind.OBLIVIOUS:
            raise StrategyError(f"robber strategy is {self.kind.value}, not oblivious")
        return self.oblivious_map.get(x3, x3)

    @classmethod
    def stay(cls) -> "RobberStrategy":
        return cls(RobberKind.OBLIVIOUS)


@dataclass(frozen=True)
class CopPolicy:
    """Stationary Markovian cop strategy keyed by (x¹,x²,x³).

    In the sequential game player i is only consulted at u=i states. Unlisted
    states default to "stay".
    """

    player: int
    kind: PolicyKind
    moves: Mapping[Triple, Distribution] = field(default_factory=dict)

    def __post_init__(self):
        if self.player not in (1, 2):
            raise StrategyError(f"cop player must be 1 or 2, got {self.player}")
        object.__setattr__(
            self, "moves", _frozen({k: _frozen(dict(sorted(d.items()))) for k, d in self.moves.items()})
        )

    def __reduce__(self):
        return (CopPolicy, (self.player, self.kind, {k: dict(d) for k, d in self.moves.items()}))

    def distribution(self, x1: int, x2: int, x3: int) -> Distribution:
        entry = self.moves.get((x1, x2, x3))
        if entry is None:
            own = (x1, x2)[self.player - 1]
            return {own: 1.0}
        return entry

    @classmethod
    def deterministic(cls, player: int, table: Mapping[Triple, int]) -> "CopPolicy":
        return cls(player, PolicyKind.DETERMINISTIC, {k: {a: 1.0} for k, a in table.items()})

    @classmethod
    def stay(cls, player: int) -> "CopPolicy":
        return cls(player, PolicyKind.DETERMINISTIC)


def robber_move_distribution(sigma3: RobberStrategy, x1: int, x2: int, x3: int) -> Distribution:
    """Distribution of the robber's next vertex, supported on N[x³], sorted by vertex."""
    if sigma3.kind is RobberKind.OBLIVIOUS:
        return {sigma3.oblivious_map.get(x3, x3): 1.0}
    if sigma3.kind is RobberKind.STATE:
        return {sigma3.state_map.get((x1, x2, x3), x3): 1.0}
    return sigma3.distribution_map.get((x1, x2, x3), {x3: 1.0})


# --- Text formats ---

def _tokens(text: str):
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line_no, line.split()


def _ints(tokens: List[str], line_no: int) -> List[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"not a decimal integer in {' '.join(tokens)!r}", line_no) from exc


def _prob(token: str, line_no: int) -> float:
    try:
        p = float(token)
    except ValueError as exc:
        raise ParseError(f"not a decimal probability: {token!r}", line_no) from exc
    if not math.isfinite(p) or p < 0:
        raise StrategyError(f"line {line_no}: probability {token} must be finite and >= 0")
    return p


def _check_triple(g: Graph, triple: Triple, line_no: int) -> None:
    for x in triple:
        if not 1 <= x <= g.vertex_count:
            raise StrategyError(f"line {line_no}: vertex {x} outside 1..{g.vertex_count}")


def _check_sum(where: str, dist: Mapping[int, float]) -> None:
    total = math.fsum(dist.values())
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise StrategyError(f"distribution at {where} sums to {total!r}, not 1")


def load_robber_strategy(text: str, g: Graph) -> RobberStrategy:
    """Parses `robber <kind>` followed by `m`/`p` lines; validates legality against g."""
    kind = None
    oblivious: Dict[int, int] = {}
    state: Dict[Triple, int] = {}
    markov: Dict[Triple, Dict[int, float]] = {}

    for line_no, parts in _tokens(text):
        if kind is None:
            if parts[0] != "robber" or len(parts) != 2:
                raise ParseError(f"expected 'robber <kind>', got {' '.join(parts)!r}", line_no)
            try:
                kind = RobberKind(parts[1])
            except ValueError as exc:
                raise ParseError(f"unknown robber kind {parts[1]!r}", line_no) from exc
            continue

        if kind is RobberKind.OBLIVIOUS:
            if parts[0] != "m" or len(parts) != 3:
                raise ParseError("expected 'm <x3> <dest>'", line_no)
            x3, dest = _ints(parts[1:], line_no)
            _check_triple(g, (x3, x3, x3), line_no)
            _check_move(g, (x3,), x3, dest, line_no)
            if x3 in oblivious:
                raise ParseError(f"duplicate entry for vertex {x3}", line_no)
            oblivious[x3] = dest
        elif kind is RobberKind.STATE:
            if parts[0] != "m" or len(parts) != 5:
                raise ParseError("expected 'm <x1> <x2> <x3> <dest>'", line_no)
            x1, x2, x3, dest = _ints(parts[1:], line_no)
            _check_triple(g, (x1, x2, x3), line_no)
            _check_move(g, (x1, x2, x3), x3, dest, line_no)
            if (x1, x2, x3) in state:
                raise ParseError(f"duplicate entry for state {(x1, x2, x3)}", line_no)
            state[(x1, x2, x3)] = dest
        else:
            if parts[0] != "p" or len(parts) != 6:
                raise ParseError("expected 'p <x1> <x2> <x3> <dest> <prob>'", line_no)
            x1, x2, x3, dest = _ints(parts[1:5], line_no)
            prob = _prob(parts[5], line_no)
            _check_triple(g, (x1, x2, x3), line_no)
            _check_move(g, (x1, x2, x3), x3, dest, line_no)
            markov.setdefault((x1, x2, x3), {})
            markov[(x1, x2, x3)][dest] = markov[(x1, x2, x3)].get(dest, 0.0) + prob

    if kind is None:
        raise ParseError("missing 'robber <kind>' header")
    for triple, dist in markov.items():
        _check_sum(str(triple), dist)
        markov[triple] = {a: p for a, p in dist.items() if p > 0}

    logger.debug("loaded %s robber strategy with %d entries", kind.value,
                 len(oblivious) + len(state) + len(markov))
    return RobberStrategy(kind, oblivious, state, markov).validate(g)


def _check_entry(g: Graph, triple: Triple, dest: int) -> None:
    if any(not 1 <= x <= g.vertex_count for x in triple):
        raise StrategyError(f"state {triple} has a vertex outside 1..{g.vertex_count}")
    if dest not in g.closed_neighborhood(triple[2]):
        raise StrategyError(f"illegal move at state {triple}: {dest} is not in N[{triple[2]}]")


def _check_move(g: Graph, where: tuple, origin: int, dest: int, line_no: int) -> None:
    if not 1 <= dest <= g.vertex_count or dest not in g.closed_neighborhood(origin):
        raise StrategyError(
            f"line {line_no}: illegal move at state {where}: {dest} is not in N[{origin}]"
        )


def dump_robber_strategy(sigma3: RobberStrategy) -> str:
    lines = [f"robber {sigma3.kind.value}"]
    if sigma3.kind is RobberKind.OBLIVIOUS:
        lines.extend(f"m {x3} {d}" for x3, d in sorted(sigma3.oblivious_map.items()))
    elif sigma3.kind is RobberKind.STATE:
        lines.extend(f"m {x1} {x2} {x3} {d}" for (x1, x2, x3), d in sorted(sigma3.state_map.items()))
    else:
        for (x1, x2, x3), dist in sorted(sigma3.distribution_map.items()):
            lines.extend(f"p {x1} {x2} {x3} {d} {p!r}" for d, p in dist.items())
    return "\n".join(lines) + "\n"


def load_cop_policy(text: str, g: Graph) -> CopPolicy:
    """Parses `cop <player> <kind>` followed by `m x1 x2 x3 dest` or `p x1 x2 x3 dest prob`."""
    player = kind = None
    moves: Dict[Triple, Dict[int, float]] = {}
    for line_no, parts in _tokens(text):
        if player is None:
            if parts[0] != "cop" or len(parts) != 3:
                raise ParseError(f"expected 'cop <player> <kind>', got {' '.join(parts)!r}", line_no)
            player = _ints(parts[1:2], line_no)[0]
            if player not in (1, 2):
                raise ParseError(f"cop player must be 1 or 2, got {player}", line_no)
            try:
                kind = PolicyKind(parts[2])
            except ValueError as exc:
                raise ParseError(f"unknown policy kind {parts[2]!r}", line_no) from exc
            continue
        if kind is PolicyKind.DETERMINISTIC:
            if parts[0] != "m" or len(parts) != 5:
                raise ParseError("expected 'm <x1> <x2> <x3> <dest>'", line_no)
            x1, x2, x3, dest = _ints(parts[1:], line_no)
            prob = 1.0
        else:
            if parts[0] != "p" or len(parts) != 6:
                raise ParseError("expected 'p <x1> <x2> <x3> <dest> <prob>'", line_no)
            x1, x2, x3, dest = _ints(parts[1:5], line_no)
            prob = _prob(parts[5], line_no)
        _check_triple(g, (x1, x2, x3), line_no)
        moves.setdefault((x1, x2, x3), {})
        moves[(x1, x2, x3)][dest] = moves[(x1, x2, x3)].get(dest, 0.0) + prob

    if player is None:
        raise ParseError("missing 'cop <player> <kind>' header")
    policy = CopPolicy(player, kind, moves)
    violations = validate_policy(policy, g, "sequential")
    if violations:
        raise StrategyError("; ".join(violations))
    return policy


def dump_cop_policy(policy: CopPolicy) -> str:
    lines = [f"cop {policy.player} {policy.kind.value}"]
    for (x1, x2, x3), dist in sorted(policy.moves.items()):
        if policy.kind is PolicyKind.DETERMINISTIC:
            (dest,) = dist.keys()
            lines.append(f"m {x1} {x2} {x3} {dest}")
        else:
            lines.extend(f"p {x1} {x2} {x3} {d} {p!r}" for d, p in dist.items())
    return "\n".join(lines) + "\n"


def validate_policy(policy: CopPolicy, g: Graph, variant: str) -> List[str]:
    """Returns every violation found; an empty list means the policy is valid."""
    variant = getattr(variant, "value", variant)
    suffix = f",{policy.player}" if variant == "sequential" else ""
    errors = []
    for (x1, x2, x3), dist in sorted(policy.moves.items()):
        where = f"({x1},{x2},{x3}{suffix})"
        if not all(1 <= x <= g.vertex_count for x in (x1, x2, x3)):
            errors.append(f"state {where} has a vertex outside 1..{g.vertex_count}")
            continue
        own = (x1, x2)[policy.player - 1]
        legal = g.closed_neighborhood(own)
        for dest, p in dist.items():
            if dest not in legal:
                errors.append(f"C{policy.player} move {own}->{dest} at {where} is illegal ({dest} not in N[{own}])")
            if p < 0 or not math.isfinite(p):
                errors.append(f"C{policy.player} weight {p!r} for {dest} at {where} is not a probability")
        if policy.kind is PolicyKind.DETERMINISTIC and len(dist) != 1:
            errors.append(f"deterministic policy prescribes {len(dist)} moves at {where}")
        total = math.fsum(dist.values())
        if abs(total - 1.0) > SUM_TOLERANCE:
            errors.append(f"distribution at {where} sums to {total!r}, not 1")
    return errors
