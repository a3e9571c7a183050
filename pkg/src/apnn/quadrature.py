"""Gauss-Legendre rules on a velocity interval and the velocity moments built on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, ShapeError


@dataclass(frozen=True)
class QuadratureRule:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    omega: tuple

    @property
    def length(self):
        return self.omega[1] - self.omega[0]


def legendre_roots(n, max_iter=100, tol=1e-15):
    """Roots and Gauss weights of P_n on [-1, 1] by Newton on the three-term recurrence."""
    if n < 1:
        raise ConfigError(f"quadrature needs n >= 1, got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        p0, p1 = np.ones_like(x), x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    else:
        raise NumericError(f"Legendre root iteration for n={n} did not converge")
    # one more evaluation so the weights use the converged roots
    p0, p1 = np.ones_like(x), x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # enforce exact mirror symmetry of the rule
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def gauss_legendre(n, omega):
    """n-point Gauss-Legendre rule mapped affinely onto ``omega = (a, b)``."""
    a, b = float(omega[0]), float(omega[1])
    if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
        raise ConfigError(f"velocity interval must be finite with positive length, got {omega}")
    x, w = legendre_roots(int(n))
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * x
    weights = half * w
    # the weights sum to |Omega| up to rounding; remove the residual drift
    weights = weights * ((b - a) / weights.sum())
    return QuadratureRule(int(n), nodes, weights, (a, b))


def _check(rule, samples):
    samples = np.asarray(samples) if not hasattr(samples, "data") else samples
    if samples.shape[-1] != rule.n:
        raise ShapeError(f"expected {rule.n} samples on the last axis, got shape {samples.shape}")
    return samples


def moment(rule, samples):
    """<samples> = sum_i w_i samples_i over the last axis (works on tape nodes too)."""
    samples = _check(rule, samples)
    return (samples * rule.weights).sum(axis=-1)


def flux_moment(rule, samples):
    """<v samples> = sum_i w_i v_i samples_i over the last axis."""
    samples = _check(rule, samples)
    return (samples * (rule.weights * rule.nodes)).sum(axis=-1)


def project_pi(rule, samples, maxwellian):
    """Projection onto the equilibrium: <samples> times the Maxwellian at the nodes."""
    samples = _check(rule, samples)
    maxwellian = _check(rule, maxwellian)
    if np.shape(maxwellian) != np.shape(samples):
        raise ShapeError(f"shape mismatch {np.shape(samples)} vs {np.shape(maxwellian)}")
    m = moment(rule, samples)
    if hasattr(m, "data"):
        return m.reshape(m.shape + (1,)) * maxwellian
    return m[..., None] * maxwellian
