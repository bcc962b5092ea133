"""Gaussian-process regression with an ARD Matern-5/2 (or squared-exponential) kernel.

Inputs are mapped from the optimization box to the unit cube and targets are
standardized before fitting; posterior queries answer in original units.
The constant mean is profiled out of the marginal likelihood in closed form,
the remaining log-hyperparameters are fitted by multi-start coordinate
ascent with golden-section line searches.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from ._search import golden_max

__all__ = [
    "Kernel",
    "GpConfig",
    "GpState",
    "kernel_eval",
    "kernel_matrix",
    "condition",
    "fit",
    "posterior",
    "log_marginal_likelihood",
    "JITTER_START",
    "JITTER_MAX",
]

SQRT5 = math.sqrt(5.0)
JITTER_START = 1e-10
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class Kernel:
    signal_variance: float
    lengthscales: tuple
    kind: str = "matern52"

    def __post_init__(self):
        if self.kind not in ("matern52", "se"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.signal_variance > 0 or not all(ell > 0 for ell in self.lengthscales):
            raise ValueError("kernel hyperparameters must be strictly positive")


def kernel_matrix(kernel: Kernel, A, B) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    ell = np.asarray(kernel.lengthscales, dtype=float)
    if A.shape[1] != ell.size or B.shape[1] != ell.size:
        raise ValueError(f"inputs must have {ell.size} columns, got {A.shape[1]} and {B.shape[1]}")
    diff = (A[:, None, :] - B[None, :, :]) / ell
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    if kernel.kind == "se":
        return kernel.signal_variance * np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    return kernel.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * np.exp(-SQRT5 * r)


def kernel_eval(kernel: Kernel, x, x_prime) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x_prime = np.asarray(x_prime, dtype=float).ravel()
    if x.shape != x_prime.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x_prime.shape}")
    return float(kernel_matrix(kernel, x[None, :], x_prime[None, :])[0, 0])


@dataclass(frozen=True)
class GpConfig:
    kind: str = "matern52"
    n_restarts: int = 8
    noise_floor: float = 1e-8
    learn_noise: bool = True
    lengthscale_bounds: tuple = (1e-2, 1e2)
    signal_bounds: tuple = (1e-4, 1e4)
    noise_bounds: tuple = (1e-8, 1e0)
    max_sweeps: int = 20
    line_tol: float = 1e-3
    seed: int = 0


@dataclass
class GpState:
    """Conditioned GP. ``X`` is stored normalized, ``y`` standardized."""

    X: np.ndarray
    y: np.ndarray
    kernel: Kernel
    noise_variance: float
    mean_const: float
    box_lo: np.ndarray
    box_hi: np.ndarray
    y_mean: float
    y_scale: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    jitter: float = 0.0
    log_likelihood: float = float("nan")
    start_log_likelihoods: tuple = ()

    @property
    def prior_mean(self) -> float:
        return self.y_mean + self.y_scale * self.mean_const

    @property
    def prior_variance(self) -> float:
        return self.y_scale**2 * self.kernel.signal_variance

    def normalize(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        x = np.clip(x, self.box_lo, self.box_hi)
        return (x - self.box_lo) / (self.box_hi - self.box_lo)

    def to_dict(self) -> dict:
        return {
            "kind": self.kernel.kind,
            "signal_variance": self.kernel.signal_variance,
            "lengthscales": list(self.kernel.lengthscales),
            "noise_variance": self.noise_variance,
            "mean_const": self.mean_const,
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
            "box_lo": self.box_lo.tolist(),
            "box_hi": self.box_hi.tolist(),
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "log_likelihood": self.log_likelihood,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _factor(K):
    """Cholesky with escalating diagonal jitter; returns (L, jitter used)."""
    n = K.shape[0]
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(K + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise


def _profile(U, y, kernel, noise):
    """Factorize and profile out the constant mean. Returns (lml, L, jitter, mu, alpha)."""
    n = U.shape[0]
    K = kernel_matrix(kernel, U, U) + noise * np.eye(n)
    L, jitter = _factor(K)
    ones = np.ones(n)
    Ki1 = cho_solve((L, True), ones)
    Kiy = cho_solve((L, True), y)
    mu = float(ones @ Kiy / (ones @ Ki1))
    resid = y - mu
    alpha = cho_solve((L, True), resid)
    lml = -0.5 * float(resid @ alpha) - float(np.log(np.diag(L)).sum()) - 0.5 * n * math.log(2 * math.pi)
    return lml, L, jitter, mu, alpha


def log_marginal_likelihood(U, y, kernel, noise) -> float:
    """Log evidence of standardized targets at normalized inputs, mean profiled."""
    return _profile(np.asarray(U, float), np.asarray(y, float), kernel, noise)[0]


def condition(X, y, kernel: Kernel, noise_variance: float, box_lo, box_hi, standardize=True) -> GpState:
    """Condition a GP with fixed hyperparameters on raw data ``(X, y)``."""
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    U = (np.clip(X, box_lo, box_hi) - box_lo) / (box_hi - box_lo)
    if standardize:
        y_mean = float(y.mean())
        y_scale = float(y.std())
        if not y_scale > 0:
            y_scale = 1.0
    else:
        y_mean, y_scale = 0.0, 1.0
    ys = (y - y_mean) / y_scale
    lml, L, jitter, mu, alpha = _profile(U, ys, kernel, noise_variance)
    return GpState(U, ys, kernel, noise_variance, mu, box_lo, box_hi, y_mean, y_scale, L, alpha, jitter, lml)


def _unpack(theta, dim, kind, fixed_noise):
    ell = tuple(float(v) for v in np.exp(theta[:dim]))
    kern = Kernel(float(np.exp(theta[dim])), ell, kind)
    noise = fixed_noise if fixed_noise is not None else float(np.exp(theta[dim + 1]))
    return kern, noise


def _batch_lml(U, y, thetas, kind, fixed_noise):
    """Profiled log marginal likelihood for each row of ``thetas``."""
    m, n, dim = thetas.shape[0], U.shape[0], U.shape[1]
    ell = np.exp(thetas[:, :dim])
    sig = np.exp(thetas[:, dim])
    noise = np.full(m, fixed_noise) if fixed_noise is not None else np.exp(thetas[:, dim + 1])
    diff = U[:, None, :] - U[None, :, :]
    r2 = np.einsum("ijk,mk->mij", diff * diff, 1.0 / ell**2)
    if kind == "se":
        K = np.exp(-0.5 * r2)
    else:
        r = np.sqrt(r2)
        K = (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * np.exp(-SQRT5 * r)
    K = sig[:, None, None] * K + noise[:, None, None] * np.eye(n)
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        out = np.empty(m)
        for i in range(m):
            kern, nz = _unpack(thetas[i], dim, kind, fixed_noise)
            try:
                out[i] = _profile(U, y, kern, nz)[0]
            except np.linalg.LinAlgError:
                out[i] = -np.inf
        return out
    rhs = np.broadcast_to(np.column_stack([np.ones(n), y]), (m, n, 2))
    w = np.linalg.solve(L, rhs)
    z = np.linalg.solve(np.swapaxes(L, 1, 2), w)
    ones_Ki1 = z[:, :, 0].sum(axis=1)
    ones_Kiy = z[:, :, 1].sum(axis=1)
    mu = ones_Kiy / ones_Ki1
    # r' K^-1 r with r = y - mu
    yKy = np.einsum("mi,mi->m", w[:, :, 1], w[:, :, 1])
    quad = yKy - 2 * mu * ones_Kiy + mu**2 * ones_Ki1
    logdet = np.log(np.diagonal(L, axis1=1, axis2=2)).sum(axis=1)
    return -0.5 * quad - logdet - 0.5 * n * math.log(2 * math.pi)


def fit(X, y, box_lo, box_hi, config: GpConfig | None = None) -> GpState:
    """Fit hyperparameters by maximizing the log marginal likelihood.

    All restarts ascend in lockstep so each likelihood call factorizes a
    stack of Gram matrices at once.
    """
    config = config or GpConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] < 2 or X.shape[0] != y.size:
        raise ValueError("fit needs at least two (x, y) pairs")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
        raise ValueError("training data must be finite")
    # canonical ordering makes the fit independent of input order
    order = np.lexsort(np.column_stack([X, y]).T[::-1])
    X, y = X[order], y[order]
    dim = X.shape[1]
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)

    if np.all(y == y[0]):
        kern = Kernel(1.0, (0.5,) * dim, config.kind)
        return condition(X, y, kern, config.noise_floor, box_lo, box_hi)

    y_mean = float(y.mean())
    y_scale = float(y.std())
    ys = (y - y_mean) / y_scale
    U = (np.clip(X, box_lo, box_hi) - box_lo) / (box_hi - box_lo)

    fixed_noise = None if config.learn_noise else config.noise_floor
    noise_lo = max(config.noise_bounds[0], config.noise_floor)
    bounds = [config.lengthscale_bounds] * dim + [config.signal_bounds]
    if fixed_noise is None:
        bounds.append((noise_lo, config.noise_bounds[1]))
    lo = np.log([b[0] for b in bounds])
    hi = np.log([b[1] for b in bounds])

    rng = np.random.default_rng(config.seed)
    default = np.log([0.3] * dim + [1.0] + ([1e-4] if fixed_noise is None else []))
    n_starts = max(1, config.n_restarts)
    thetas = np.vstack([np.clip(default, lo, hi)] + [rng.uniform(lo, hi) for _ in range(n_starts - 1)])

    def objective(th):
        return _batch_lml(U, ys, th, config.kind, fixed_noise)

    best = objective(thetas)
    start_vals = best.copy()
    for _ in range(config.max_sweeps):
        before = best.copy()
        for c in range(thetas.shape[1]):

            def along(vals, c=c):
                trial = thetas.copy()
                trial[:, c] = vals
                return objective(trial)

            a = np.maximum(lo[c], thetas[:, c] - 2.0)
            b = np.minimum(hi[c], thetas[:, c] + 2.0)
            xc, fc = golden_max(along, a, b, config.line_tol)
            up = fc > best
            thetas[up, c] = xc[up]
            best = np.where(up, fc, best)
        if np.all(best - before < 1e-8):
            break

    i_best = int(np.argmax(best))
    kern, noise = _unpack(thetas[i_best], dim, config.kind, fixed_noise)
    state = condition(X, y, kern, noise, box_lo, box_hi)
    return replace(state, start_log_likelihoods=tuple(float(v) for v in start_vals))


def posterior(gp: GpState, x):
    """Posterior mean and variance at ``x`` (one point or rows), original units.

    Points outside the box are clamped onto it.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    U = gp.normalize(x)
    Ks = kernel_matrix(gp.kernel, U, gp.X)
    mean = gp.mean_const + Ks @ gp.alpha
    w = solve_triangular(gp.chol, Ks.T, lower=True)
    var = gp.kernel.signal_variance - np.einsum("ij,ij->j", w, w)
    var = np.maximum(var, 0.0)
    mean = gp.y_mean + gp.y_scale * mean
    var = gp.y_scale**2 * var
    if single:
        return float(mean[0]), float(var[0])
    return mean, var
