"""Empirical violation probability over day scenarios and the penalized objective.

A day counts as violated when any of its snapshots has an unsolvable power
flow or breaks a voltage or line limit. The violation probability is the
fraction of violated days, kept as an exact rational so that feasibility
against the risk level is decided without round-off.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .distflow import batch_feasible, solve_batch
from .network import Network, NetworkError, injection_vectors
from .scenario import ScenarioSet

__all__ = [
    "RiskResult",
    "default_workers",
    "day_violations",
    "violation_probability",
    "penalized_objective",
    "penalized_value",
    "scaled_quadratic_penalty",
    "z_vector",
    "within_violation_budget",
]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("PHCA_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class RiskResult:
    eps_hat: float
    violated_days: list
    n_snapshots_checked: int
    raw_capacity: float
    n_days: int
    objective: float | None = None
    eps_bar: float | None = None
    day_flags: dict = field(default_factory=dict, repr=False)

    @property
    def eps_hat_exact(self) -> Fraction:
        return Fraction(len(self.violated_days), self.n_days)

    def to_dict(self, verbose=False) -> dict:
        out = {
            "eps_hat": self.eps_hat,
            "violated_days": list(self.violated_days),
            "n_snapshots_checked": self.n_snapshots_checked,
            "objective": self.objective,
            "raw_capacity": self.raw_capacity,
            "n_days": self.n_days,
            "eps_bar": self.eps_bar,
        }
        if verbose:
            out["day_flags"] = {str(k): v for k, v in self.day_flags.items()}
        return out


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    # shortest decimal form: 0.05 means 1/20, not the nearest binary double
    return Fraction(repr(float(value)))


def scaled_quadratic_penalty(excess: Fraction, eps_bar: Fraction, n_candidates: int) -> Fraction:
    """|L| * (100 * excess / eps_bar)^2."""
    return n_candidates * (100 * excess / eps_bar) ** 2


def penalized_value(raw_capacity, eps_hat, eps_bar, n_candidates, penalty=scaled_quadratic_penalty) -> float:
    """``raw_capacity - penalty(max(eps_hat - eps_bar, 0))``.

    ``raw_capacity`` is returned unchanged whenever ``eps_hat <= eps_bar``.
    """
    excess = _as_fraction(eps_hat) - _as_fraction(eps_bar)
    if excess <= 0:
        return raw_capacity
    rho = penalty(excess, _as_fraction(eps_bar), n_candidates)
    return float(Fraction(raw_capacity) - Fraction(rho))


def _check_psi(network, scenarios, psi):
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (network.n_candidates,):
        raise NetworkError(f"psi must have length {network.n_candidates}, got shape {psi.shape}")
    if np.any(psi < 0) or not np.all(np.isfinite(psi)):
        raise NetworkError("psi must be finite and non-negative")
    problems = scenarios.check_against(network)
    if problems:
        raise NetworkError("; ".join(problems))
    return psi


def _chunk_flags(network, days, psi):
    alpha = np.concatenate([d.alpha for d in days])
    dd = np.concatenate([d.d for d in days])
    ee = np.concatenate([d.e for d in days])
    p, q = injection_vectors(network, psi, alpha, dd, ee)
    ok = batch_feasible(network, solve_batch(network, p, q))
    return ~ok.reshape(len(days), -1).all(axis=1)


def day_violations(network: Network, scenarios: ScenarioSet, psi, workers: int | None = None) -> np.ndarray:
    """Boolean violation flag per day, in scenario order.

    Days are split into contiguous chunks, one per worker; each chunk's
    snapshots are solved as one batch. Rows are solved independently, so
    the flags do not depend on the chunking.
    """
    psi = _check_psi(network, scenarios, psi)
    workers = workers or default_workers()
    days = scenarios.days
    n_chunks = max(1, min(workers, len(days)))
    bounds = np.linspace(0, len(days), n_chunks + 1).astype(int)
    chunks = [days[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(chunks) == 1:
        return _chunk_flags(network, chunks[0], psi)
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda ch: _chunk_flags(network, ch, psi), chunks))
    return np.concatenate(parts)


def violation_probability(network: Network, scenarios: ScenarioSet, psi, workers: int | None = None) -> RiskResult:
    flags = day_violations(network, scenarios, psi, workers)
    ids = scenarios.day_ids()
    violated = [i for i, f in zip(ids, flags) if f]
    return RiskResult(
        eps_hat=len(violated) / scenarios.N,
        violated_days=violated,
        n_snapshots_checked=scenarios.N * scenarios.T,
        raw_capacity=math.fsum(np.asarray(psi, dtype=float)),
        n_days=scenarios.N,
        day_flags={i: bool(f) for i, f in zip(ids, flags)},
    )


def penalized_objective(
    network: Network,
    scenarios: ScenarioSet,
    psi,
    eps_bar: float,
    penalty=scaled_quadratic_penalty,
    workers: int | None = None,
) -> RiskResult:
    """Evaluate the violation probability and the penalized capacity c(psi)."""
    if not 0 < eps_bar < 1:
        raise ValueError(f"eps_bar must lie in (0, 1), got {eps_bar}")
    res = violation_probability(network, scenarios, psi, workers)
    res.eps_bar = eps_bar
    res.objective = penalized_value(res.raw_capacity, res.eps_hat_exact, eps_bar, network.n_candidates, penalty)
    return res


def z_vector(result: RiskResult, day_ids) -> np.ndarray:
    """0/1 relaxation indicators of the big-M formulation, one per day."""
    bad = set(result.violated_days)
    return np.array([1 if i in bad else 0 for i in day_ids], dtype=int)


def within_violation_budget(z, eps_bar) -> bool:
    """Whether (1/N) * sum(z) <= eps_bar, evaluated exactly."""
    z = np.asarray(z)
    return Fraction(int(z.sum()), len(z)) <= _as_fraction(eps_bar)
