import pytest

from core.fixtures import mixing_graph, mixing_robber
from core.graph_core import Graph
from core.strategies import RobberStrategy
from graph_helpers import path_graph


@pytest.fixture
def path3() -> Graph:
    return path_graph(3)


@pytest.fixture
def mix_graph() -> Graph:
    return mixing_graph()


@pytest.fixture
def mix_robber(mix_graph) -> RobberStrategy:
    return mixing_robber(mix_graph)


@pytest.fixture
def stay() -> RobberStrategy:
    return RobberStrategy.stay()
