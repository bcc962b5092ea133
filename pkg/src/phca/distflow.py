"""DistFlow power flow on radial feeders by backward-forward sweep.

The branch-flow equations solved for every line (i, j), i the parent of j::

    p_j + P_ij = r_ij l_ij + sum_k P_jk
    q_j + Q_ij = x_ij l_ij + sum_k Q_jk
    v_i - v_j  = 2 (r_ij P_ij + x_ij Q_ij) + (r_ij^2 + x_ij^2) l_ij
    l_ij       = (P_ij^2 + Q_ij^2) / v_i

The core routine works on a batch of snapshots at once. Every snapshot is
iterated independently (rows stop updating once converged), so a row's
result does not depend on what else is in the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Network, NetworkError

__all__ = [
    "TOL",
    "MAX_ITER",
    "FlowSolution",
    "LimitReport",
    "BatchFlow",
    "solve_distflow",
    "solve_batch",
    "check_limits",
    "batch_feasible",
    "distflow_residuals",
]

TOL = 1e-10
MAX_ITER = 100


@dataclass
class FlowSolution:
    """Power-flow state of one snapshot.

    ``P``, ``Q`` and ``l`` follow the order of ``network.lines``; ``v`` is
    indexed by node id and includes the substation at position 0.
    """

    P: np.ndarray
    Q: np.ndarray
    v: np.ndarray
    l: np.ndarray
    converged: bool
    iterations: int
    residual: float

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "Q": self.Q.tolist(),
            "v": self.v.tolist(),
            "l": self.l.tolist(),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
        }


@dataclass
class LimitReport:
    voltage_violations: list = field(default_factory=list)
    line_violations: list = field(default_factory=list)
    feasible: bool = True


@dataclass
class BatchFlow:
    """Node-indexed batch state: column j of P/Q/l is the line into node j."""

    P: np.ndarray
    Q: np.ndarray
    v: np.ndarray
    l: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray


def _child_sums(topo, F):
    out = np.zeros_like(F)
    for j in topo.order[::-1]:
        out[:, topo.parent[j]] += F[:, j]
    return out


def _node_residuals(topo, P, Q, v, l, p, q):
    """Row-wise max absolute residual; ``p``/``q`` are padded to node ids."""
    order = topo.order
    par = topo.parent[order]
    r, x = topo.r[order], topo.x[order]
    cP = _child_sums(topo, P)
    cQ = _child_sums(topo, Q)
    Pj, Qj, lj = P[:, order], Q[:, order], l[:, order]
    vi, vj = v[:, par], v[:, order]
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.stack(
            [
                p[:, order] + Pj - r * lj - cP[:, order],
                q[:, order] + Qj - x * lj - cQ[:, order],
                vi - vj - 2 * (r * Pj + x * Qj) - (r * r + x * x) * lj,
                lj - (Pj * Pj + Qj * Qj) / vi,
            ]
        )
    res = np.abs(res)
    res[~np.isfinite(res)] = np.inf
    return res.max(axis=(0, 2)) if order.size else np.zeros(P.shape[0])


def _sweep(topo, v0, p, q, l):
    """One backward (flows) then forward (voltages) pass, then refresh l."""
    b, n = p.shape
    P = np.zeros((b, n))
    Q = np.zeros((b, n))
    cP = np.zeros((b, n))
    cQ = np.zeros((b, n))
    for j in topo.order[::-1]:
        P[:, j] = topo.r[j] * l[:, j] - p[:, j] + cP[:, j]
        Q[:, j] = topo.x[j] * l[:, j] - q[:, j] + cQ[:, j]
        i = topo.parent[j]
        cP[:, i] += P[:, j]
        cQ[:, i] += Q[:, j]
    v = np.empty((b, n))
    v[:, 0] = v0
    for j in topo.order:
        r, x = topo.r[j], topo.x[j]
        v[:, j] = v[:, topo.parent[j]] - 2 * (r * P[:, j] + x * Q[:, j]) - (r * r + x * x) * l[:, j]
    l_new = np.zeros((b, n))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for j in topo.order:
            l_new[:, j] = (P[:, j] ** 2 + Q[:, j] ** 2) / v[:, topo.parent[j]]
    return P, Q, v, l_new


def solve_batch(network: Network, p, q, tol=TOL, max_iter=MAX_ITER) -> BatchFlow:
    """Solve DistFlow for a batch of snapshots.

    ``p`` and ``q`` have shape (B, |V|) for nodes 1..V. Rows that hit a
    non-positive voltage or non-finite state stop with ``converged=False``.
    """
    topo = network.topology
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    n_v = network.n_nodes
    if p.shape[1] != n_v or q.shape != p.shape:
        raise NetworkError(f"injections must have {n_v} columns, got {p.shape} and {q.shape}")
    b = p.shape[0]
    # pad so column j is node j
    pn = np.zeros((b, n_v + 1))
    qn = np.zeros((b, n_v + 1))
    pn[:, 1:] = p
    qn[:, 1:] = q

    v0 = network.substation_v0
    P = np.zeros((b, n_v + 1))
    Q = np.zeros((b, n_v + 1))
    l = np.zeros((b, n_v + 1))
    v = np.full((b, n_v + 1), float(v0))
    converged = np.zeros(b, dtype=bool)
    active = np.ones(b, dtype=bool)
    iterations = np.zeros(b, dtype=np.intp)
    residual = np.full(b, np.inf)

    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Pa, Qa, va, la = _sweep(topo, v0, pn[idx], qn[idx], l[idx])
        res = _node_residuals(topo, Pa, Qa, va, la, pn[idx], qn[idx])
        bad = ~np.isfinite(res) | (va[:, 1:] <= 0).any(axis=1)
        P[idx], Q[idx], v[idx], l[idx] = Pa, Qa, va, la
        residual[idx] = res
        iterations[idx] = it
        done = (res <= tol) & ~bad
        converged[idx[done]] = True
        active[idx[done | bad]] = False
    return BatchFlow(P, Q, v, l, converged, iterations, residual)


def solve_distflow(network: Network, p, q, tol=TOL, max_iter=MAX_ITER) -> FlowSolution:
    """Solve one snapshot; never raises on non-convergence."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.ndim != 1 or q.ndim != 1:
        raise NetworkError("solve_distflow takes one snapshot; use solve_batch for many")
    bf = solve_batch(network, p[None, :], q[None, :], tol, max_iter)
    child = _line_children(network)
    return FlowSolution(
        P=bf.P[0, child].copy(),
        Q=bf.Q[0, child].copy(),
        v=bf.v[0].copy(),
        l=bf.l[0, child].copy(),
        converged=bool(bf.converged[0]),
        iterations=int(bf.iterations[0]),
        residual=float(bf.residual[0]),
    )


def _line_children(network):
    topo = network.topology
    child = np.empty(len(network.lines), dtype=np.intp)
    child[topo.line_of[topo.order]] = topo.order
    return child


def distflow_residuals(network: Network, sol: FlowSolution, p, q) -> float:
    """Max absolute residual of the four DistFlow equations for ``sol``."""
    topo = network.topology
    n = network.n_nodes + 1
    child = _line_children(network)

    def nodewise(a):
        out = np.zeros((1, n))
        out[0, child] = a
        return out

    pn = np.zeros((1, n))
    qn = np.zeros((1, n))
    pn[0, 1:] = p
    qn[0, 1:] = q
    v = np.asarray(sol.v, dtype=float)[None, :]
    return float(_node_residuals(topo, nodewise(sol.P), nodewise(sol.Q), v, nodewise(sol.l), pn, qn)[0])


def check_limits(network: Network, sol: FlowSolution) -> LimitReport:
    """List voltage and apparent-power limit breaches of one solution."""
    topo = network.topology
    report = LimitReport()
    for j in range(1, network.n_nodes + 1):
        vj = float(sol.v[j])
        if vj < topo.v_min[j]:
            report.voltage_violations.append((j, vj, float(topo.v_min[j])))
        elif vj > topo.v_max[j]:
            report.voltage_violations.append((j, vj, float(topo.v_max[j])))
    for k, ln in enumerate(network.lines):
        s2 = float(sol.P[k]) ** 2 + float(sol.Q[k]) ** 2
        if s2 > ln.s_max**2:
            report.line_violations.append((k, float(np.sqrt(s2)), ln.s_max))
    report.feasible = bool(sol.converged) and not report.voltage_violations and not report.line_violations
    return report


def batch_feasible(network: Network, bf: BatchFlow) -> np.ndarray:
    """Per-row feasibility: converged and inside every voltage and line limit."""
    topo = network.topology
    v = bf.v[:, 1:]
    ok_v = ((v >= topo.v_min[1:]) & (v <= topo.v_max[1:])).all(axis=1)
    s2 = bf.P[:, 1:] ** 2 + bf.Q[:, 1:] ** 2
    ok_s = (s2 <= topo.s_max[1:] ** 2).all(axis=1)
    return bf.converged & ok_v & ok_s
