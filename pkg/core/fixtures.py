"""Built-in instance where a deterministic, non-oblivious robber forces both cops to randomise."""

from core.graph_core import Graph, load_graph
from core.strategies import RobberStrategy, load_robber_strategy

MIXING_GRAPH = """\
# pendant 1 and path 2-3-4-5-6 joined at 4
graph 6 5
e 1 4
e 2 3
e 3 4
e 4 5
e 5 6
"""

MIXING_ROBBER = """\
# unlisted states: the robber stays
robber state
m 2 6 1 4
m 2 6 4 3
m 2 5 4 5
m 3 6 4 5
m 3 5 4 3
"""

MIXING_START = (2, 6, 1)
MIXING_ROWS = (2, 3)
MIXING_COLS = (6, 5)


def mixing_graph() -> Graph:
    return load_graph(MIXING_GRAPH)


def mixing_robber(g: Graph | None = None) -> RobberStrategy:
    return load_robber_strategy(MIXING_ROBBER, g or mixing_graph())
