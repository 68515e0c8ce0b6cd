"""Correlated Wiener increments, Euler-Maruyama stepping, and the
closed-form Ornstein-Uhlenbeck oracle used to validate the integrator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad


@dataclass
class NoiseBlock:
    """One step's Wiener increments for all agents.

    Each marginal is Normal(0, dt); pairwise correlation equals the
    requested coefficient in expectation.
    """

    increments: np.ndarray


class CorrelatedNoise:
    """Sampler for equicorrelated Wiener increments.

    For col >= 0 the increments mix one shared standard normal with
    independent ones:  dW_i = sqrt(dt) * (sqrt(col) Z0 + sqrt(1-col) Z_i).
    For col < 0 the Cholesky factor of the equicorrelated matrix is used;
    feasibility requires col > -1/(n-1).
    """

    def __init__(self, n: int, col: float, dt: float, rng: np.random.Generator):
        if dt <= 0:
            raise ValueError("dt must be > 0")
        lower = max(-1.0 / (n - 1), -1.0) if n > 1 else -1.0
        if not (lower < col < 1.0):
            raise ValueError(
                f"noise correlation {col} outside PSD-valid range ({lower:.6g}, 1)"
            )
        self.n = n
        self.col = col
        self.sqrt_dt = np.sqrt(dt)
        self.rng = rng
        self._chol = None
        if col < 0:
            cov = np.full((n, n), col) + (1.0 - col) * np.eye(n)
            self._chol = np.linalg.cholesky(cov)

    def sample(self) -> np.ndarray:
        if self.col == 0.0:
            return self.sqrt_dt * self.rng.standard_normal(self.n)
        if self._chol is not None:
            z = self.rng.standard_normal(self.n)
            return self.sqrt_dt * (self._chol @ z)
        z0 = self.rng.standard_normal()
        z = self.rng.standard_normal(self.n)
        return self.sqrt_dt * (
            np.sqrt(self.col) * z0 + np.sqrt(1.0 - self.col) * z
        )


def correlated_increments(
    n: int, col: float, dt: float, rng: np.random.Generator
) -> NoiseBlock:
    """Draw one block of n equicorrelated Wiener increments."""
    return NoiseBlock(CorrelatedNoise(n, col, dt, rng).sample())


def em_step(x, drift, beta, dw, dt: float):
    """One Euler-Maruyama step:  x' = x + drift*dt + beta*dW (elementwise)."""
    x = np.asarray(x, dtype=float)
    drift = np.asarray(drift, dtype=float)
    if isinstance(dw, NoiseBlock):
        dw = dw.increments
    dw = np.asarray(dw, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if drift.shape != x.shape or dw.shape != x.shape:
        raise ValueError(
            f"dimension mismatch: x{x.shape}, drift{drift.shape}, dW{dw.shape}"
        )
    if beta.ndim and beta.shape != x.shape:
        raise ValueError(f"dimension mismatch: x{x.shape}, beta{beta.shape}")
    return x + drift * dt + beta * dw


@dataclass
class OuSpec:
    """Mean-reverting process  dx = (-alpha * x + g) dt + beta dW.

    ``alpha`` and ``g`` may be constants or functions of time; ``beta``
    is constant.  The stable convention is used throughout: alpha > 0
    pulls the state back toward g/alpha.
    """

    alpha: float | Callable[[float], float] = 1.0
    g: float | Callable[[float], float] = 0.0
    beta: float = 0.0
    x0: float = 0.0

    def alpha_at(self, t: float) -> float:
        return self.alpha(t) if callable(self.alpha) else self.alpha

    def g_at(self, t: float) -> float:
        return self.g(t) if callable(self.g) else self.g


_QUAD_TOL = 1e-8


def ou_fundamental_solution(alpha, t0: float, t: float) -> float:
    """Fundamental solution phi(t) = exp(integral of alpha over [t0, t]).

    ``alpha`` may be a constant or a function of time; phi(t0) = 1.
    """
    if not callable(alpha):
        return float(np.exp(alpha * (t - t0)))
    val, _ = quad(alpha, t0, t, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL)
    return float(np.exp(val))


def ou_exact_mean(spec: OuSpec, t: float) -> float:
    """Expected value of the zero-start process at time t.

    For constant alpha > 0 and constant g this is g*(1 - exp(-alpha*t))/alpha
    in closed form; otherwise the kernel integral
    int_0^t exp(-int_eta^t alpha) g(eta) d_eta is evaluated by adaptive
    quadrature to relative tolerance 1e-8.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not callable(spec.alpha) and not callable(spec.g):
        a, g = float(spec.alpha), float(spec.g)
        if a == 0.0:
            return g * t
        return g * (1.0 - np.exp(-a * t)) / a

    if callable(spec.alpha):
        def kernel(eta):
            decay, _ = quad(spec.alpha, eta, t, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL)
            return np.exp(-decay) * spec.g_at(eta)
    else:
        a = float(spec.alpha)

        def kernel(eta):
            return np.exp(-a * (t - eta)) * spec.g_at(eta)

    val, _ = quad(kernel, 0.0, t, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    return float(val)


def ou_transition_moments(spec: OuSpec, t: float) -> tuple[float, float]:
    """Exact mean and variance of x(t) | x(0)=x0 for constant coefficients."""
    if callable(spec.alpha) or callable(spec.g):
        raise ValueError("transition moments require constant coefficients")
    a, g = float(spec.alpha), float(spec.g)
    if a <= 0:
        raise ValueError(
            "transition sampling requires alpha > 0 (stationary-variance formula)"
        )
    mean = spec.x0 * np.exp(-a * t) + g * (1.0 - np.exp(-a * t)) / a
    var = spec.beta**2 * (1.0 - np.exp(-2.0 * a * t)) / (2.0 * a)
    return float(mean), float(var)


def ou_exact_paths(
    spec: OuSpec, t: float, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample the exact transition distribution of the OU process at time t.

    Draws from Normal(mean, var) with the closed-form transition moments;
    serves as the oracle against Monte Carlo Euler-Maruyama paths.
    """
    mean, var = ou_transition_moments(spec, t)
    if var == 0.0:
        return np.full(n_paths, mean)
    return rng.normal(mean, np.sqrt(var), size=n_paths)
