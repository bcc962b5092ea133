"""Bundled test instances.

``feeder6`` is a 6-node feeder (substation plus five nodes, two laterals)
with DER candidates at both lateral ends; pair it with
``generate_synthetic(net, 30, 24, seed=1)``.

``multimodal`` is a hand-built two-lateral feeder with 20 day scenarios
whose feasible set (at most one violated day at eps_bar = 0.05) is
L-shaped: either DER 1 stays small or DER 2 stays below its own limit.
Coordinate search started in the narrow arm cannot reach the wide one.
"""

from __future__ import annotations

import os
from importlib import resources

import numpy as np

from .network import Line, Network, Node, load_network
from .scenario import DayScenario, ScenarioSet, generate_synthetic

__all__ = [
    "VOLTAGE_BOUNDS",
    "build_feeder6",
    "build_multimodal_network",
    "build_multimodal_scenarios",
    "feeder6",
    "feeder6_scenarios",
    "multimodal",
    "MULTIMODAL_START",
    "MULTIMODAL_EPS_BAR",
    "data_path",
]

# +/- 5 % magnitude band expressed on squared voltages
VOLTAGE_BOUNDS = (0.95**2, 1.05**2)
MULTIMODAL_START = (0.25, 4.75)
MULTIMODAL_EPS_BAR = 0.05


def data_path(name: str) -> str:
    return os.fspath(resources.files("phca") / "data" / name)


def build_feeder6() -> Network:
    nodes = tuple(Node(i, *VOLTAGE_BOUNDS) for i in range(6))
    lines = (
        Line(0, 1, 0.01, 0.01, 2.0),
        Line(1, 2, 0.02, 0.015, 2.0),
        Line(2, 3, 0.03, 0.02, 2.0),
        Line(1, 4, 0.015, 0.01, 2.0),
        Line(4, 5, 0.015, 0.01, 2.0),
    )
    return Network(nodes, lines, candidates=(3, 5), psi_max=(1.2, 2.0), eta=(0.0, 0.0))


def build_multimodal_network() -> Network:
    nodes = tuple(Node(i, *VOLTAGE_BOUNDS) for i in range(5))
    lines = (
        Line(0, 1, 0.05, 0.03, 10.0),
        Line(1, 2, 0.05, 0.03, 10.0),
        Line(0, 3, 0.0064, 0.004, 10.0),
        Line(3, 4, 0.0064, 0.004, 10.0),
    )
    return Network(nodes, lines, candidates=(2, 4), psi_max=(5.0, 5.0), eta=(0.0, 0.0))


def build_multimodal_scenarios() -> ScenarioSet:
    """Three snapshots per day; only the middle one has sun.

    Day 1 is clear at DER 1 only, day 2 at DER 2 only, days 3..20 overcast.
    """
    T = 3
    d = np.full((T, 4), 0.01)
    e = 0.3 * d

    def day(i, noon):
        alpha = np.zeros((T, 2))
        alpha[1] = noon
        return DayScenario(i, alpha, d.copy(), e.copy())

    days = [day(1, (1.0, 0.0)), day(2, (0.0, 1.0))]
    days += [day(i, (0.05, 0.05)) for i in range(3, 21)]
    return ScenarioSet(tuple(days))


def feeder6() -> Network:
    return load_network(data_path("feeder6.json"))


def feeder6_scenarios(network: Network | None = None) -> ScenarioSet:
    return generate_synthetic(network or feeder6(), n_days=30, T=24, seed=1)


def multimodal():
    """(network, scenarios) of the multi-modal instance."""
    return load_network(data_path("multimodal.json")), build_multimodal_scenarios()
