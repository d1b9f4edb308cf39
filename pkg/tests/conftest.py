import numpy as np
import pytest

from driftloc.network import build_graph, random_geometric_graph


@pytest.fixture
def path5():
    """Path a-b-c-d-e with sensors at both ends."""
    nodes = "abcde"
    positions = {n: (float(i), 0.0) for i, n in enumerate(nodes)}
    edges = [(a, b) for a, b in zip(nodes, nodes[1:])]
    return build_graph(edges, positions, sensors=["a", "e"])


@pytest.fixture
def small_geometric():
    return random_geometric_graph(30, 0.3, 5, seed=42)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
