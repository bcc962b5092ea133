"""Improvement-based acquisition functions and their maximization over a box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

from ._search import golden_max
from .gp import GpState, posterior

__all__ = [
    "AcquisitionConfig",
    "AcquisitionResult",
    "ei_closed_form",
    "pi_closed_form",
    "expected_improvement",
    "probability_of_improvement",
    "acquisition_values",
    "maximize_acquisition",
    "penalized_ei",
    "penalized_pi",
    "RiskModel",
]

_SQRT_HALF_PI = np.sqrt(np.pi / 2)
_INV_SQRT_2PI = 1.0 / np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class AcquisitionConfig:
    kind: str = "ei"
    n_starts: int = 64
    refine_iters: int = 3
    seed: int = 0
    screen: int = 2048
    refine_width: float = 0.1
    tol: float = 1e-4

    def __post_init__(self):
        if self.kind not in ("ei", "pi"):
            raise ValueError(f"acquisition must be 'ei' or 'pi', got {self.kind!r}")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")


def _gaussian_args(mu, sigma, best):
    mu, sigma = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float))
    shape = mu.shape
    gap = (mu - best).ravel()
    sigma = sigma.ravel()
    pos = sigma > 0
    z = np.zeros_like(gap)
    with np.errstate(over="ignore"):
        # far left of -1e100 the improvement is exactly zero in float64
        z[pos] = np.maximum(gap[pos] / sigma[pos], -1e100)
    return shape, gap, sigma, pos, z


def ei_closed_form(mu, sigma, best):
    """E[max(f - best, 0)] for f ~ N(mu, sigma^2); sigma = 0 gives the limit."""
    shape, gap, sigma, pos, z = _gaussian_args(mu, sigma, best)
    out = np.maximum(gap, 0.0)
    z, g, s = z[pos], gap[pos], sigma[pos]
    with np.errstate(over="ignore"):
        phi = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    val = g * ndtr(z) + s * phi
    # erfcx form avoids cancellation in the far left tail
    tail = z < -1.0
    zt = z[tail]
    val[tail] = s[tail] * phi[tail] * (1.0 + zt * _SQRT_HALF_PI * erfcx(-zt / np.sqrt(2)))
    out[pos] = np.maximum(val, 0.0)
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def pi_closed_form(mu, sigma, best):
    """P(f > best) for f ~ N(mu, sigma^2); sigma = 0 gives the indicator."""
    shape, gap, sigma, pos, z = _gaussian_args(mu, sigma, best)
    out = (gap > 0).astype(float)
    out[pos] = ndtr(z[pos])
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def _quad_moment(d, sigma, u0, u1):
    """E[(d + sigma Z)^2 ; u0 < Z < u1] for standard normal Z."""
    p0, p1 = ndtr(u0), ndtr(u1)
    f0 = _INV_SQRT_2PI * np.exp(-0.5 * u0 * u0)
    f1 = _INV_SQRT_2PI * np.exp(-0.5 * u1 * u1)
    mass = p1 - p0
    return d * d * mass + 2 * d * sigma * (f0 - f1) + sigma * sigma * (mass + u0 * f0 - u1 * f1)


def penalized_ei(raw, mu, sigma, best, eps_bar, kappa):
    """Expected improvement of ``raw - kappa * max(e - eps_bar, 0)^2`` over ``best``.

    ``e ~ N(mu, sigma^2)`` models the violation probability. Improvement is
    positive only for ``e < e_star = eps_bar + sqrt((raw - best) / kappa)``;
    below ``eps_bar`` it equals ``raw - best``, in between the quadratic
    penalty is integrated against the Gaussian in closed form.
    """
    raw, mu, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (raw, mu, sigma)))
    a = raw - best
    out = np.zeros(a.shape)
    ok = a > 0
    if not np.any(ok):
        return out
    a, m, s = a[ok], mu[ok], sigma[ok]
    e_star = eps_bar + np.sqrt(a / kappa)
    val = np.where(m <= eps_bar, a, np.maximum(a - kappa * (m - eps_bar) ** 2, 0.0))
    pos = s > 0
    if np.any(pos):
        sp, mp, ap = s[pos], m[pos], a[pos]
        # +/-40 is saturation for both the normal cdf and u * pdf
        u0 = np.clip((eps_bar - mp) / sp, -40.0, 40.0)
        u1 = np.clip((e_star[pos] - mp) / sp, -40.0, 40.0)
        val[pos] = np.maximum(ap * ndtr(u1) - kappa * _quad_moment(mp - eps_bar, sp, u0, u1), 0.0)
    out[ok] = val
    return out


def penalized_pi(raw, mu, sigma, best, eps_bar, kappa):
    """P(raw - kappa * max(e - eps_bar, 0)^2 > best) for e ~ N(mu, sigma^2)."""
    raw, mu, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (raw, mu, sigma)))
    a = raw - best
    out = np.zeros(a.shape)
    ok = a > 0
    e_star = eps_bar + np.sqrt(np.where(ok, a, 0.0) / kappa)
    pos = ok & (sigma > 0)
    out[pos] = ndtr((e_star[pos] - mu[pos]) / sigma[pos])
    flat = ok & ~(sigma > 0)
    out[flat] = (mu[flat] < e_star[flat]).astype(float)
    return out


@dataclass
class RiskModel:
    """Surrogate of c(psi) = 1'psi - kappa * max(eps(psi) - eps_bar, 0)^2.

    The raw capacity is known exactly; only the violation probability is
    uncertain and is modelled by ``gp``. ``kappa = |L| (100 / eps_bar)^2``
    for the scaled quadratic penalty.
    """

    gp: GpState
    eps_bar: float
    kappa: float

    def values(self, X, best, kind):
        mean, var = posterior(self.gp, X)
        sd = np.sqrt(var)
        raw = X.sum(axis=1)
        if kind == "ei":
            return penalized_ei(raw, mean, sd, best, self.eps_bar, self.kappa)
        return penalized_pi(raw, mean, sd, best, self.eps_bar, self.kappa)


def _values(model, X, best, kind):
    if isinstance(model, RiskModel):
        return model.values(X, best, kind)
    mean, var = posterior(model, X)
    sd = np.sqrt(var)
    return ei_closed_form(mean, sd, best) if kind == "ei" else pi_closed_form(mean, sd, best)


def acquisition_values(gp: GpState, X, incumbent_best: float, kind: str = "ei") -> np.ndarray:
    return _values(gp, np.atleast_2d(X), incumbent_best, kind)


def expected_improvement(gp: GpState, x, incumbent_best: float) -> float:
    return float(_values(gp, np.atleast_2d(x), incumbent_best, "ei")[0])


def probability_of_improvement(gp: GpState, x, incumbent_best: float) -> float:
    return float(_values(gp, np.atleast_2d(x), incumbent_best, "pi")[0])


@dataclass
class AcquisitionResult:
    """Refined candidates sorted by acquisition value, best first."""

    x: np.ndarray
    value: float
    candidates: np.ndarray
    values: np.ndarray


def maximize_acquisition(gp, box_lo, box_hi, config: AcquisitionConfig, incumbent_best: float) -> AcquisitionResult:
    """Multi-start coordinate golden-section maximization inside the box.

    A seeded uniform screen of the box picks the ``n_starts`` most promising
    starting points; each is refined coordinate by coordinate for
    ``refine_iters`` sweeps within a bracket of ``refine_width`` (unit-box
    units) around its current position. Ties keep start order.
    """
    lo = np.asarray(box_lo, dtype=float)
    hi = np.asarray(box_hi, dtype=float)
    dim = lo.size
    span = hi - lo
    rng = np.random.default_rng(config.seed)
    screen = rng.uniform(size=(max(config.screen, config.n_starts), dim))
    sv = _values(gp, lo + screen * span, incumbent_best, config.kind)
    keep = np.argsort(-sv, kind="stable")[: config.n_starts]
    U = screen[keep].copy()
    vals = sv[keep].copy()

    for _ in range(config.refine_iters):
        for c in range(dim):

            def along(t, c=c):
                trial = U.copy()
                trial[:, c] = t
                return _values(gp, lo + trial * span, incumbent_best, config.kind)

            a = np.maximum(0.0, U[:, c] - config.refine_width)
            b = np.minimum(1.0, U[:, c] + config.refine_width)
            tc, fc = golden_max(along, a, b, config.tol)
            up = fc > vals
            U[up, c] = tc[up]
            vals = np.where(up, fc, vals)

    rank = np.argsort(-vals, kind="stable")
    cands = np.clip(lo + U[rank] * span, lo, hi)
    return AcquisitionResult(cands[0].copy(), float(vals[rank[0]]), cands, vals[rank])
