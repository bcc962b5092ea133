"""Hosting-capacity solvers over the box 0 <= psi <= psi_max.

All three maximize the penalized capacity c(psi) and record every objective
evaluation in a :class:`SolveTrace`:

* :func:`solve_bayesopt` -- GP surrogate + acquisition loop;
* :func:`solve_pattern` -- coordinate pattern search, the local baseline;
* :func:`grid_search` -- exhaustive lattice, the reference optimum for |L| <= 3.
"""

from __future__ import annotations

import itertools
import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc, rankdata

from .acquisition import AcquisitionConfig, RiskModel, maximize_acquisition
from .gp import GpConfig, fit
from .network import Network
from .risk import penalized_objective, scaled_quadratic_penalty
from .scenario import ScenarioSet

__all__ = [
    "SolveConfig",
    "Query",
    "SolveTrace",
    "Evaluator",
    "solve_bayesopt",
    "solve_pattern",
    "grid_search",
    "solve",
    "DUPLICATE_TOL",
]

DUPLICATE_TOL = 1e-9


def signed_log(y):
    """Monotone compression sign(y) * log(1 + |y|); keeps the argmax."""
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.log1p(np.abs(y))


def normal_scores(y):
    """Rank-based normal scores: Phi^-1((rank - 0.5) / n), ties averaged."""
    y = np.asarray(y, dtype=float)
    return ndtri((rankdata(y) - 0.5) / y.size)


WARPS = {"none": lambda y: np.asarray(y, dtype=float), "signed_log": signed_log, "rank": normal_scores}


@dataclass(frozen=True)
class SolveConfig:
    budget: int = 40
    n_initial: int | None = None
    eps_bar: float = 0.05
    seed: int = 0
    method: str = "bayesopt"
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    gp: GpConfig = field(default_factory=GpConfig)
    points_per_dim: int = 11
    x0: tuple | None = None
    workers: int | None = None
    surrogate: str = "risk"
    output_warp: str = "signed_log"

    def initial_size(self, n_candidates: int) -> int:
        return self.n_initial if self.n_initial is not None else max(4, 2 * n_candidates)

    def check(self, n_candidates: int):
        if not 0 < self.eps_bar < 1:
            raise ValueError(f"eps_bar must lie in (0, 1), got {self.eps_bar}")
        if self.surrogate not in ("risk", "objective"):
            raise ValueError(f"surrogate must be 'risk' or 'objective', got {self.surrogate!r}")
        if self.output_warp not in WARPS:
            raise ValueError(f"unknown output warp {self.output_warp!r}")
        if self.method == "bayesopt":
            n0 = self.initial_size(n_candidates)
            if not self.budget > n0 >= 2:
                raise ValueError(f"bayesopt needs budget > n_initial >= 2 (budget={self.budget}, n_initial={n0})")
        elif self.budget < 1:
            raise ValueError("budget must be at least 1")


@dataclass
class Query:
    psi: np.ndarray
    eps_hat: float
    objective: float
    raw_capacity: float
    elapsed_ms: float


@dataclass
class SolveTrace:
    method: str
    queries: list = field(default_factory=list)
    best_obj: list = field(default_factory=list)
    best_psi: np.ndarray | None = None

    @property
    def nfuncall(self) -> int:
        return len(self.queries)

    @property
    def best(self) -> float:
        return self.best_obj[-1] if self.best_obj else float("-inf")

    def record(self, q: Query):
        if not self.best_obj or q.objective > self.best_obj[-1]:
            self.best_psi = q.psi.copy()
            self.best_obj.append(q.objective)
        else:
            self.best_obj.append(self.best_obj[-1])
        self.queries.append(q)

    def best_query(self) -> Query:
        i = int(np.argmax([q.objective for q in self.queries]))
        return self.queries[i]

    def to_dict(self, timing: bool = False) -> dict:
        best = self.best_query()
        return {
            "method": self.method,
            "queries": [
                {
                    "iter": i + 1,
                    "psi": q.psi.tolist(),
                    "eps_hat": q.eps_hat,
                    "objective": q.objective,
                    "raw_capacity": q.raw_capacity,
                    "best_obj": b,
                    "elapsed_ms": q.elapsed_ms if timing else None,
                }
                for i, (q, b) in enumerate(zip(self.queries, self.best_obj))
            ],
            "summary": {
                "best_obj": self.best,
                "best_psi": self.best_psi.tolist(),
                "nfuncall": self.nfuncall,
                "best_eps_hat": best.eps_hat,
                "best_raw_capacity": best.raw_capacity,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolveTrace":
        try:
            trace = cls(method=data.get("method", "unknown"))
            for q in data["queries"]:
                trace.record(
                    Query(
                        np.asarray(q["psi"], dtype=float),
                        float(q["eps_hat"]),
                        float(q["objective"]),
                        float(q.get("raw_capacity", np.sum(q["psi"]))),
                        q.get("elapsed_ms"),
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed trace: {exc}") from exc
        if not trace.queries:
            raise ValueError("malformed trace: no queries")
        return trace

    def save(self, path, timing: bool = False):
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(self.to_dict(timing), fh, indent=2)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "SolveTrace":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class Evaluator:
    """Counts and records objective evaluations into a trace."""

    def __init__(self, network, scenarios, config, method, penalty=scaled_quadratic_penalty):
        self.network = network
        self.scenarios = scenarios
        self.config = config
        self.penalty = penalty
        self.lo = np.zeros(network.n_candidates)
        self.hi = np.asarray(network.psi_max, dtype=float)
        self.trace = SolveTrace(method)

    @property
    def remaining(self) -> int:
        return self.config.budget - self.trace.nfuncall

    def __call__(self, psi) -> float:
        psi = np.clip(np.asarray(psi, dtype=float), self.lo, self.hi)
        t0 = time.perf_counter()
        res = penalized_objective(
            self.network, self.scenarios, psi, self.config.eps_bar, self.penalty, self.config.workers
        )
        ms = (time.perf_counter() - t0) * 1e3
        self.trace.record(Query(psi, res.eps_hat, res.objective, res.raw_capacity, ms))
        return res.objective


def _check_inputs(network, scenarios, config):
    problems = scenarios.check_against(network)
    if problems:
        raise ValueError("; ".join(problems))
    config.check(network.n_candidates)


def solve_bayesopt(network: Network, scenarios: ScenarioSet, config: SolveConfig, gp_dump=None) -> SolveTrace:
    """GP-based Bayesian optimization of c(psi) with a Latin-hypercube start.

    With ``surrogate="risk"`` (default) the GP models the violation
    probability eps_hat(psi) and the acquisition is the expected improvement
    of c(psi) = 1'psi - penalty(eps_hat(psi)) under that model; the raw
    capacity term is known exactly. With ``surrogate="objective"`` the GP
    models ``output_warp(c)`` directly.
    """
    _check_inputs(network, scenarios, config)
    ev = Evaluator(network, scenarios, config, "bayesopt")
    dim = network.n_candidates
    n0 = config.initial_size(dim)
    rng = np.random.default_rng(config.seed)
    lhs = qmc.LatinHypercube(d=dim, seed=rng).random(n0)
    for u in lhs:
        ev(ev.lo + u * (ev.hi - ev.lo))

    span = ev.hi - ev.lo
    kappa = dim * (100.0 / config.eps_bar) ** 2
    step = 0
    while ev.remaining > 0:
        gp_cfg = _with_seed(config.gp, int(rng.integers(2**31)))
        acq_cfg = _with_seed(config.acquisition, int(rng.integers(2**31)))
        X = np.array([q.psi for q in ev.trace.queries])
        if config.surrogate == "risk":
            eps = np.array([q.eps_hat for q in ev.trace.queries])
            gp = fit(X, eps, ev.lo, ev.hi, gp_cfg)
            model = RiskModel(gp, config.eps_bar, kappa)
            incumbent = ev.trace.best
        else:
            wy = WARPS[config.output_warp](np.array([q.objective for q in ev.trace.queries]))
            gp = model = fit(X, wy, ev.lo, ev.hi, gp_cfg)
            incumbent = float(np.max(wy))
        if gp_dump is not None:
            gp.dump(f"{gp_dump}.{step}.json")
        result = maximize_acquisition(model, ev.lo, ev.hi, acq_cfg, incumbent)
        x_next = _first_new(result.candidates, X, ev.lo, span)
        if x_next is None:
            x_next = _farthest_point(X, ev.lo, ev.hi, rng)
        ev(x_next)
        step += 1
    return ev.trace


def _with_seed(cfg, seed):
    return replace(cfg, seed=seed)


def _first_new(candidates, X, lo, span):
    U = (X - lo) / span
    for c in candidates:
        u = (c - lo) / span
        if np.min(np.max(np.abs(U - u), axis=1)) > DUPLICATE_TOL:
            return c
    return None


def _farthest_point(X, lo, hi, rng):
    pool = rng.uniform(lo, hi, size=(1024, lo.size))
    U = (X - lo) / (hi - lo)
    P = (pool - lo) / (hi - lo)
    dist = np.min(np.linalg.norm(P[:, None, :] - U[None, :, :], axis=2), axis=1)
    return pool[int(np.argmax(dist))]


def solve_pattern(network: Network, scenarios: ScenarioSet, config: SolveConfig, min_step: float = 1e-3) -> SolveTrace:
    """Coordinate pattern search: poll +/- step along each axis, halve on failure.

    Starts at ``config.x0`` when given, otherwise at a seeded uniform point.
    Stops when the budget is spent or every step falls below
    ``min_step * psi_max``.
    """
    _check_inputs(network, scenarios, config)
    ev = Evaluator(network, scenarios, config, "pattern")
    rng = np.random.default_rng(config.seed)
    if config.x0 is not None:
        x = np.clip(np.asarray(config.x0, dtype=float), ev.lo, ev.hi)
    else:
        x = rng.uniform(ev.lo, ev.hi)
    fx = ev(x)
    x = ev.trace.queries[-1].psi
    step = (ev.hi - ev.lo) / 4.0
    floor = min_step * ev.hi

    while ev.remaining > 0 and np.any(step >= floor):
        improved = False
        for c in range(x.size):
            if step[c] < floor[c]:
                continue
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[c] = np.clip(x[c] + sign * step[c], ev.lo[c], ev.hi[c])
                if trial[c] == x[c]:
                    continue
                if ev.remaining <= 0:
                    return ev.trace
                ft = ev(trial)
                if ft > fx:
                    x, fx = trial, ft
                    improved = True
                    break
        if not improved:
            step = step / 2.0
    return ev.trace


def grid_search(network: Network, scenarios: ScenarioSet, config: SolveConfig, points_per_dim: int | None = None) -> SolveTrace:
    """Evaluate c on the full lattice of ``points_per_dim`` points per axis."""
    dim = network.n_candidates
    if dim > 3:
        raise ValueError(f"grid search is limited to 3 candidates, got {dim}")
    if not 0 < config.eps_bar < 1:
        raise ValueError(f"eps_bar must lie in (0, 1), got {config.eps_bar}")
    problems = scenarios.check_against(network)
    if problems:
        raise ValueError("; ".join(problems))
    k = points_per_dim or config.points_per_dim
    if k < 2:
        raise ValueError("points_per_dim must be at least 2")
    ev = Evaluator(network, scenarios, replace(config, budget=k**dim), "grid")
    axes = [np.linspace(0.0, m, k) for m in ev.hi]
    for point in itertools.product(*axes):
        ev(np.array(point))
    return ev.trace


def solve(network: Network, scenarios: ScenarioSet, config: SolveConfig, **kwargs) -> SolveTrace:
    if config.method == "bayesopt":
        return solve_bayesopt(network, scenarios, config, **kwargs)
    if config.method == "pattern":
        return solve_pattern(network, scenarios, config, **kwargs)
    if config.method == "grid":
        return grid_search(network, scenarios, config, **kwargs)
    raise ValueError(f"unknown method {config.method!r}")
