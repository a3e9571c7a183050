from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def maxwellian(v, dphi_dx=0.0):
    """Shifted Maxwellian exp(-(v + dphi_dx)^2 / 2) / sqrt(2 pi)."""
    w = np.asarray(v) + np.asarray(dphi_dx)
    return INV_SQRT_2PI * np.exp(-0.5 * w * w)


@dataclass(frozen=True)
class Maxwellian:
    dphi_dx: float = 0.0

    def __call__(self, v):
        return maxwellian(v, self.dphi_dx)


@dataclass(frozen=True)
class ScaleField:
    """Scale parameter eps(x): constant, or the mixing profile.

    mixing: eps0 + (tanh(5 - 10x) + tanh(5 + 10x)) / 2 for x <= 0.3, eps0 beyond.
    """

    kind: str = "constant"
    eps0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "mixing"):
            raise ConfigError(f"unknown scale field kind {self.kind!r}")
        if self.eps0 < 0:
            raise ConfigError("eps0 must be non-negative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.eps0)
        bump = 0.5 * (np.tanh(5.0 - 10.0 * x) + np.tanh(5.0 + 10.0 * x))
        return np.where(x <= 0.3, self.eps0 + bump, self.eps0)


@dataclass(frozen=True)
class FourierFeatures:
    """x -> (sin(k j x), cos(k j x)) for j = 1..n, exactly periodic with period 2 pi / k."""

    k: float
    n: int = 1

    @property
    def size(self):
        return 2 * self.n

    @property
    def period(self):
        return 2.0 * np.pi / self.k

    def __call__(self, x):
        return self.jet(x)[0]

    def jet(self, x):
        """Features and their first and second x-derivatives, each shaped (..., 2n)."""
        x = np.asarray(x, dtype=float)[..., None]
        kj = self.k * np.arange(1, self.n + 1)
        s, c = np.sin(kj * x), np.cos(kj * x)
        value = np.concatenate([s, c], axis=-1)
        d1 = np.concatenate([kj * c, -kj * s], axis=-1)
        d2 = np.concatenate([-kj * kj * s, -kj * kj * c], axis=-1)
        return value, d1, d2
