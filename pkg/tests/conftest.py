import numpy as np
import pytest

from phca.fixtures import feeder6, feeder6_scenarios, multimodal
from phca.network import Line, Network, Node


@pytest.fixture(scope="session")
def net6():
    return feeder6()


@pytest.fixture(scope="session")
def scen6(net6):
    return feeder6_scenarios(net6)


@pytest.fixture(scope="session")
def mm():
    return multimodal()


def two_node(r=0.01, x=0.02, s_max=10.0, v0=1.0, vb=(0.9, 1.1), psi_max=1.0):
    nodes = (Node(0, *vb), Node(1, *vb))
    return Network(nodes, (Line(0, 1, r, x, s_max),), (1,), (psi_max,), (0.0,), substation_v0=v0)


def random_radial(rng, n_nodes, r_range=(1e-3, 1e-2)):
    """Random tree on nodes 0..n_nodes-1; every node hangs off an earlier one."""
    nodes = tuple(Node(i, 0.9**2, 1.1**2) for i in range(n_nodes))
    lines = []
    for j in range(1, n_nodes):
        i = int(rng.integers(j))
        r = float(rng.uniform(*r_range))
        lines.append(Line(i, j, r, float(rng.uniform(0.5, 1.5)) * r, 5.0))
    perm = rng.permutation(len(lines))
    lines = tuple(lines[k] for k in perm)
    return Network(nodes, lines, (n_nodes - 1,), (1.0,), (0.0,))
