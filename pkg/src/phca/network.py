"""Radial feeder description, validation and JSON (de)serialization.

Node ids must be the contiguous range ``0..V`` with node 0 the substation.
All quantities are per-unit; voltages bounds are on *squared* magnitudes.
"""

from __future__ import annotations

import json
import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Node",
    "Line",
    "Network",
    "NetworkError",
    "validate",
    "injection_vectors",
    "load_network",
    "save_network",
    "network_from_dict",
    "network_to_dict",
]


class NetworkError(ValueError):
    """Raised when a network cannot be used for computation."""


@dataclass(frozen=True)
class Node:
    id: int
    v_min: float
    v_max: float


@dataclass(frozen=True)
class Line:
    from_node: int
    to_node: int
    r: float
    x: float
    s_max: float


@dataclass(frozen=True)
class Network:
    nodes: tuple[Node, ...]
    lines: tuple[Line, ...]
    candidates: tuple[int, ...]
    psi_max: tuple[float, ...]
    eta: tuple[float, ...]
    substation_v0: float = 1.0

    @property
    def n_nodes(self) -> int:
        """Number of non-substation nodes, |V|."""
        return len(self.nodes) - 1

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    @cached_property
    def topology(self) -> "Topology":
        # structural checks only; electrical bounds are validate()'s business
        ids = sorted(nd.id for nd in self.nodes)
        if ids != list(range(len(ids))) or len(self.lines) != len(ids) - 1:
            raise NetworkError("network is not a tree over node ids 0..V")
        topo = Topology.build(self)
        if len(topo.order) != len(ids) - 1:
            raise NetworkError("network is not connected")
        return topo


@dataclass(frozen=True)
class Topology:
    """Arrays describing the tree oriented away from the substation.

    Per-node arrays are indexed by node id; entry 0 (the root) is unused.
    ``order`` lists non-root nodes so that every parent precedes its children.
    """

    order: np.ndarray
    parent: np.ndarray
    line_of: np.ndarray
    r: np.ndarray
    x: np.ndarray
    s_max: np.ndarray
    v_min: np.ndarray
    v_max: np.ndarray
    candidate_nodes: np.ndarray

    @classmethod
    def build(cls, net: Network) -> "Topology":
        n = len(net.nodes)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for k, ln in enumerate(net.lines):
            adj[ln.from_node].append((ln.to_node, k))
            adj[ln.to_node].append((ln.from_node, k))
        parent = np.full(n, -1, dtype=np.intp)
        line_of = np.full(n, -1, dtype=np.intp)
        order = []
        seen = [False] * n
        seen[0] = True
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j, k in adj[i]:
                if not seen[j]:
                    seen[j] = True
                    parent[j] = i
                    line_of[j] = k
                    order.append(j)
                    queue.append(j)
        r = np.zeros(n)
        x = np.zeros(n)
        s_max = np.full(n, np.inf)
        for j in order:
            ln = net.lines[line_of[j]]
            r[j], x[j], s_max[j] = ln.r, ln.x, ln.s_max
        by_id = sorted(net.nodes, key=lambda nd: nd.id)
        return cls(
            order=np.array(order, dtype=np.intp),
            parent=parent,
            line_of=line_of,
            r=r,
            x=x,
            s_max=s_max,
            v_min=np.array([nd.v_min for nd in by_id]),
            v_max=np.array([nd.v_max for nd in by_id]),
            candidate_nodes=np.array(net.candidates, dtype=np.intp),
        )


def validate(network: Network) -> list[str]:
    """Return a description of every structural problem; empty means valid."""
    problems = []
    ids = [nd.id for nd in network.nodes]
    n = len(ids)
    if sorted(ids) != list(range(n)):
        problems.append(f"node ids must be exactly 0..{n - 1}, got {sorted(ids)}")
    for nd in network.nodes:
        if not (0 < nd.v_min < nd.v_max):
            problems.append(
                f"node {nd.id}: voltage bounds need 0 < v_min < v_max "
                f"(got v_min={nd.v_min}, v_max={nd.v_max})"
            )
    if not network.substation_v0 > 0:
        problems.append(f"substation_v0 must be positive, got {network.substation_v0}")

    valid_ids = set(ids)
    for k, ln in enumerate(network.lines):
        if ln.from_node not in valid_ids or ln.to_node not in valid_ids:
            problems.append(f"line {k}: unknown endpoint ({ln.from_node}, {ln.to_node})")
        if ln.from_node == ln.to_node:
            problems.append(f"line {k}: self loop at node {ln.from_node}")
        if ln.r < 0 or ln.x < 0 or not (ln.r + ln.x > 0):
            problems.append(f"line {k}: impedance needs r >= 0, x >= 0, r + x > 0")
        if not ln.s_max > 0:
            problems.append(f"line {k}: s_max must be positive, got {ln.s_max}")

    if len(network.lines) != n - 1:
        problems.append(
            f"cycle / |E| != |V|: tree with {n - 1} non-substation nodes "
            f"needs {n - 1} lines, got {len(network.lines)}"
        )
    # union-find catches cycles and disconnection regardless of edge count
    root = list(range(n))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    for k, ln in enumerate(network.lines):
        if not (0 <= ln.from_node < n and 0 <= ln.to_node < n) or ln.from_node == ln.to_node:
            continue
        a, b = find(ln.from_node), find(ln.to_node)
        if a == b:
            problems.append(f"cycle: line {k} ({ln.from_node}-{ln.to_node}) closes a loop")
        else:
            root[a] = b
    if n and any(find(i) != find(0) for i in range(n)):
        unreached = [i for i in range(n) if find(i) != find(0)]
        problems.append(f"disconnected: nodes {unreached} not reachable from substation")

    cands = list(network.candidates)
    if not cands:
        problems.append("at least one DER candidate location is required")
    if len(set(cands)) != len(cands):
        problems.append(f"duplicate candidate locations in {cands}")
    for c in cands:
        if c not in valid_ids or c == 0:
            problems.append(f"candidate {c} is not a non-substation node")
    if len(network.psi_max) != len(cands):
        problems.append("psi_max length must equal number of candidates")
    elif any(not m > 0 for m in network.psi_max):
        problems.append("psi_max must be positive componentwise")
    if len(network.eta) != len(cands):
        problems.append("eta length must equal number of candidates")
    return problems


def injection_vectors(network, psi, alpha, d, e):
    """Nodal real/reactive injections for DER capacities ``psi``.

    ``alpha`` has length |L| (or shape (..., |L|)); ``d`` and ``e`` have
    length |V| for nodes 1..V. Leading batch dimensions broadcast.
    """
    psi = np.asarray(psi, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    n_l, n_v = network.n_candidates, network.n_nodes
    if psi.shape != (n_l,):
        raise NetworkError(f"psi must have length {n_l}, got shape {psi.shape}")
    if alpha.shape[-1] != n_l:
        raise NetworkError(f"alpha must have {n_l} columns, got shape {alpha.shape}")
    if d.shape[-1] != n_v or e.shape[-1] != n_v:
        raise NetworkError(f"loads must have {n_v} columns, got {d.shape} and {e.shape}")

    gen = alpha * psi
    eta = np.asarray(network.eta, dtype=float)
    p = -d.copy()
    q = -e.copy()
    cols = np.asarray(network.candidates) - 1
    p[..., cols] += gen
    q[..., cols] += eta * gen
    return p, q


def network_to_dict(network: Network) -> dict:
    return {
        "nodes": [{"id": nd.id, "v_min": nd.v_min, "v_max": nd.v_max} for nd in network.nodes],
        "lines": [
            {"from": ln.from_node, "to": ln.to_node, "r": ln.r, "x": ln.x, "s_max": ln.s_max}
            for ln in network.lines
        ],
        "substation_v0": network.substation_v0,
        "candidates": list(network.candidates),
        "psi_max": list(network.psi_max),
        "eta": list(network.eta),
    }


def network_from_dict(data: dict) -> Network:
    try:
        return Network(
            nodes=tuple(Node(int(n["id"]), float(n["v_min"]), float(n["v_max"])) for n in data["nodes"]),
            lines=tuple(
                Line(int(ln["from"]), int(ln["to"]), float(ln["r"]), float(ln["x"]), float(ln["s_max"]))
                for ln in data["lines"]
            ),
            candidates=tuple(int(c) for c in data["candidates"]),
            psi_max=tuple(float(m) for m in data["psi_max"]),
            eta=tuple(float(h) for h in data["eta"]),
            substation_v0=float(data.get("substation_v0", 1.0)),
        )
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network description: missing or bad field {exc}") from exc


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def save_network(network: Network, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(network_to_dict(network), fh, indent=2)
    os.replace(tmp, path)
