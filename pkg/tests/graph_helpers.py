import networkx as nx
import numpy as np

from core.graph_core import Graph
from core.strategies import RobberKind, RobberStrategy


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(1, n)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, frozenset({(i, i + 1) for i in range(1, n)} | {(1, n)}))


def from_networkx(h: nx.Graph) -> Graph:
    return Graph(h.number_of_nodes(), frozenset((u + 1, v + 1) for u, v in h.edges()))


def connected_graphs(max_n: int, min_n: int = 1):
    """Every connected graph on min_n..max_n vertices, up to isomorphism."""
    for h in nx.graph_atlas_g():
        n = h.number_of_nodes()
        if min_n <= n <= max_n and nx.is_connected(h):
            yield from_networkx(h)


def random_oblivious(g: Graph, rng: np.random.Generator) -> RobberStrategy:
    table = {x: int(rng.choice(g.closed_neighborhood(x))) for x in g.vertices}
    return RobberStrategy(RobberKind.OBLIVIOUS, oblivious_map=table).validate(g)


def random_state_robber(g: Graph, rng: np.random.Generator) -> RobberStrategy:
    table = {}
    for x1 in g.vertices:
        for x2 in g.vertices:
            for x3 in g.vertices:
                table[(x1, x2, x3)] = int(rng.choice(g.closed_neighborhood(x3)))
    return RobberStrategy(RobberKind.STATE, state_map=table).validate(g)


def random_markov_robber(g: Graph, rng: np.random.Generator) -> RobberStrategy:
    table = {}
    for x1 in g.vertices:
        for x2 in g.vertices:
            for x3 in g.vertices:
                support = g.closed_neighborhood(x3)
                weights = rng.dirichlet(np.ones(len(support)))
                # exact sum to 1 by construction of the last entry
                probs = list(weights[:-1]) + [1.0 - float(np.sum(weights[:-1]))]
                table[(x1, x2, x3)] = {a: float(p) for a, p in zip(support, probs) if p > 0}
    return RobberStrategy(RobberKind.MARKOV, distribution_map=table).validate(g)


