"""Playing field G=(V,E): edge-list loading, neighborhoods, distances, cop-win test."""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import FrozenSet, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from core.errors import GraphValidationError, InputError, ParseError

logger = logging.getLogger(__name__)

VertexSet = Tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    """Undirected simple connected graph on the dense vertex ids 1..n."""

    vertex_count: int
    edges: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.vertex_count < 1:
            raise GraphValidationError(f"vertex count must be positive, got {self.vertex_count}")
        normalized = set()
        for u, v in self.edges:
            if not (1 <= u <= self.vertex_count and 1 <= v <= self.vertex_count):
                raise GraphValidationError(f"edge {u}-{v} has an endpoint outside 1..{self.vertex_count}")
            if u == v:
                raise GraphValidationError(f"self-loop at vertex {u}")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))
        components, _ = connected_components(self.adjacency, directed=False)
        if components != 1:
            raise GraphValidationError(f"graph is disconnected ({components} components)")

    @property
    def vertices(self) -> range:
        return range(1, self.vertex_count + 1)

    @cached_property
    def adjacency(self) -> csr_matrix:
        """Symmetric 0/1 adjacency, row/column i-1 for vertex i."""
        n = self.vertex_count
        if not self.edges:
            return csr_matrix((n, n), dtype=np.int8)
        us, vs = zip(*sorted(self.edges))
        rows = np.array(us + vs) - 1
        cols = np.array(vs + us) - 1
        return csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))

    @cached_property
    def closed_mask(self) -> np.ndarray:
        """Boolean n×n matrix: closed_mask[x-1, y-1] iff y ∈ N[x]."""
        return self.adjacency.toarray().astype(bool) | np.eye(self.vertex_count, dtype=bool)

    @cached_property
    def _neighborhoods(self) -> Tuple[VertexSet, ...]:
        return tuple(
            tuple(int(y) + 1 for y in np.flatnonzero(row)) for row in self.closed_mask
        )

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs BFS distances as an int matrix indexed by vertex-1."""
        return shortest_path(self.adjacency, directed=False, unweighted=True).astype(np.int64)

    def check_vertex(self, x: int) -> None:
        if not 1 <= x <= self.vertex_count:
            raise InputError(f"vertex {x} outside 1..{self.vertex_count}")

    def closed_neighborhood(self, x: int) -> VertexSet:
        self.check_vertex(x)
        return self._neighborhoods[x - 1]


def load_graph(text: str) -> Graph:
    """Parses the `graph <n> <m>` / `e <u> <v>` edge-list document."""
    header = None
    edges = []
    seen = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if parts[0] != "graph" or len(parts) != 3:
                raise ParseError(f"missing 'graph <n> <m>' header, got {line!r}", line_no)
            header = (_int(parts[1], line_no), _int(parts[2], line_no))
            continue
        if parts[0] != "e" or len(parts) != 3:
            raise ParseError(f"expected 'e <u> <v>', got {line!r}", line_no)
        u, v = _int(parts[1], line_no), _int(parts[2], line_no)
        n = header[0]
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphValidationError(f"line {line_no}: edge {u}-{v} has an endpoint outside 1..{n}")
        if u == v:
            raise GraphValidationError(f"line {line_no}: self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphValidationError(
                f"line {line_no}: duplicate edge {u}-{v} (first given on line {seen[key]})"
            )
        seen[key] = line_no
        edges.append(key)

    if header is None:
        raise ParseError("missing 'graph <n> <m>' header")
    n, m = header
    if n < 1:
        raise GraphValidationError(f"vertex count must be positive, got {n}")
    if len(edges) != m:
        raise ParseError(f"header announces {m} edges but {len(edges)} were given")
    return Graph(n, frozenset(edges))


def _int(token: str, line_no: int) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise ParseError(f"not a decimal integer: {token!r}", line_no) from exc


def dump_graph(g: Graph) -> str:
    lines = [f"graph {g.vertex_count} {len(g.edges)}"]
    lines.extend(f"e {u} {v}" for u, v in sorted(g.edges))
    return "\n".join(lines) + "\n"


def closed_neighborhood(g: Graph, x: int) -> VertexSet:
    return g.closed_neighborhood(x)


def bfs_distance(g: Graph, u: int, v: int) -> int:
    g.check_vertex(u)
    g.check_vertex(v)
    return int(g.distances[u - 1, v - 1])


def is_cop_win(g: Graph) -> bool:
    """Dismantlability test: repeatedly delete a corner u with N[u] ⊆ N[v], v ≠ u."""
    alive = np.ones(g.vertex_count, dtype=bool)
    mask = g.closed_mask
    remaining = g.vertex_count
    while remaining > 1:
        corner = _find_corner(mask, alive)
        if corner is None:
            logger.debug("dismantling stuck with %d vertices left", remaining)
            return False
        alive[corner] = False
        remaining -= 1
    return True


def _find_corner(mask: np.ndarray, alive: np.ndarray) -> int | None:
    live = np.flatnonzero(alive)
    sub = mask[np.ix_(live, live)]
    for i, u in enumerate(live):
        # N[u] ⊆ N[v]  <=>  no neighbour of u is missing from N[v]
        covered = ~np.any(sub[i] & ~sub, axis=1)
        covered[i] = False
        if covered.any():
            return int(u)
    return None
