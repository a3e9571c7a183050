"""The six benchmark problems: domains, initial data, background charge, scale field.

All callables are vectorised: x is (B,), v broadcasts against x[:, None],
z is (B, 10) for the uncertainty problem and ignored otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ContractError
from ..physics.fields import ScaleField, maxwellian

PROBLEMS = ("landau", "bump_on_tail", "riemann", "mixing", "gravitational", "uq")
SQRT_2PI = np.sqrt(2.0 * np.pi)
# mass of the double-peak profile: 0.9 + 0.2 * sqrt(pi / 4) / sqrt(2 pi)
BUMP_MASS = 0.9 + 0.1 / np.sqrt(2.0)


def _zprod(z, b):
    if z is None:
        return np.zeros(b)
    return np.prod(np.sin(np.pi * np.asarray(z, dtype=float)), axis=-1)


@dataclass(frozen=True)
class ProblemConfig:
    id: str
    domain: tuple
    omega: tuple
    t_final: float
    k: float
    scale: ScaleField
    field_law: str = "poisson"
    n_uq: int = 0
    alpha: float = 0.0
    equilibrium_start: bool = False  # f0 = rho0 * M(v; phi0_x), so g0 = 0 for any eps
    eval_times: tuple = ()
    notes: dict = field(default_factory=dict)

    @property
    def length(self):
        return self.domain[1] - self.domain[0]

    def eps(self, x):
        return self.scale(x)

    # -- initial and background data --------------------------------------

    def rho0(self, x, z=None):
        x = np.asarray(x, dtype=float)
        a, k = self.alpha, self.k
        if self.id in ("landau", "gravitational"):
            return 1.0 + a * np.cos(k * x)
        if self.id == "bump_on_tail":
            return BUMP_MASS * (1.0 + a * np.cos(k * x))
        if self.id == "riemann":
            return np.where((x >= 0.25) & (x < 0.75), 0.5, 0.125)
        if self.id == "mixing":
            return SQRT_2PI / 6.0 * (2.0 + np.sin(np.pi * x))
        return SQRT_2PI / 2.0 * (2.0 + np.cos(2.0 * np.pi * x)) + 0.1 * _zprod(z, x.shape[0])

    def background(self, x, z=None):
        x = np.asarray(x, dtype=float)
        if self.id in ("landau", "gravitational"):
            return np.ones_like(x)
        if self.id == "bump_on_tail":
            return np.full_like(x, BUMP_MASS)
        if self.id == "riemann":
            return np.where((x >= 0.25) & (x < 0.75), 0.125, 0.5)
        if self.id == "mixing":
            return np.full_like(x, SQRT_2PI / 3.0)
        return SQRT_2PI + 0.1 * _zprod(z, x.shape[0])

    def phi0(self, x, z=None):
        x = np.asarray(x, dtype=float)
        a, k = self.alpha, self.k
        if self.id == "landau":
            return a / k**2 * np.cos(k * x)
        if self.id == "bump_on_tail":
            return BUMP_MASS * a / k**2 * np.cos(k * x)
        if self.id == "gravitational":
            return a / k * np.sin(k * x)
        if self.id == "riemann":
            c = 3.0 / 16.0
            return np.where(x < 0.25, c * x**2 - 3.0 / 256.0,
                            np.where(x < 0.75, -c * (x - 0.5)**2 + 3.0 / 256.0,
                                     c * (x - 1.0)**2 - 3.0 / 256.0))
        if self.id == "mixing":
            return SQRT_2PI / (6.0 * np.pi**2) * np.sin(np.pi * x)
        return SQRT_2PI / (8.0 * np.pi**2) * np.cos(2.0 * np.pi * x)

    def dphi0_dx(self, x, z=None):
        x = np.asarray(x, dtype=float)
        a, k = self.alpha, self.k
        if self.id == "landau":
            return -a / k * np.sin(k * x)
        if self.id == "bump_on_tail":
            return -BUMP_MASS * a / k * np.sin(k * x)
        if self.id == "gravitational":
            return a * np.cos(k * x)
        if self.id == "riemann":
            c = 3.0 / 8.0
            return np.where(x < 0.25, c * x, np.where(x < 0.75, -c * (x - 0.5), c * (x - 1.0)))
        if self.id == "mixing":
            return SQRT_2PI / (6.0 * np.pi) * np.cos(np.pi * x)
        return -SQRT_2PI / (4.0 * np.pi) * np.sin(2.0 * np.pi * x)

    def electric_field0(self, x, z=None):
        return -self.dphi0_dx(x, z)

    def f0(self, x, v, z=None):
        """Initial distribution on the outer product of x (B,) and v (n,)."""
        x = np.asarray(x, dtype=float)[:, None]
        v = np.asarray(v, dtype=float)[None, :]
        if self.id in ("landau", "gravitational"):
            return self.rho0(x[:, 0], z)[:, None] * maxwellian(v)
        if self.id == "bump_on_tail":
            shape = (0.9 * np.exp(-0.5 * v**2) + 0.2 * np.exp(-4.0 * (v - 4.5)**2)) / SQRT_2PI
            return shape * (1.0 + self.alpha * np.cos(self.k * x))
        rho = self.rho0(x[:, 0], z)[:, None]
        return rho * maxwellian(v, self.dphi0_dx(x[:, 0], z)[:, None])

    def initial_g(self, x, v, z=None, eps=None):
        """g0 = (f0 - rho0 M0) / eps with M0 shifted by d_x phi0."""
        x = np.asarray(x, dtype=float)
        if self.equilibrium_start:
            return np.zeros((x.shape[0], np.asarray(v).shape[0]))
        eps = self.eps(x) if eps is None else np.broadcast_to(np.asarray(eps, dtype=float), x.shape)
        if np.any(eps <= 0):
            raise ContractError("initial_g needs eps > 0 unless the problem starts at equilibrium")
        m0 = maxwellian(np.asarray(v)[None, :], self.dphi0_dx(x, z)[:, None])
        return (self.f0(x, v, z) - self.rho0(x, z)[:, None] * m0) / eps[:, None]

    def with_eps(self, eps0):
        """Same problem with the scale parameter replaced (the mixing profile keeps its shape)."""
        return ProblemConfig(self.id, self.domain, self.omega, self.t_final, self.k,
                             ScaleField(self.scale.kind, float(eps0)), self.field_law, self.n_uq,
                             self.alpha, self.equilibrium_start, self.eval_times, dict(self.notes))


def make_problem(problem_id, eps=None, t_final=None):
    """Problem definition with its default scale parameter and horizon."""
    if problem_id == "landau":
        p = ProblemConfig("landau", (0.0, 4.0 * np.pi), (-6.0, 6.0), 1.0, 0.5,
                          ScaleField("constant", 1.0), alpha=0.05, eval_times=(0.5, 1.0))
    elif problem_id == "bump_on_tail":
        p = ProblemConfig("bump_on_tail", (0.0, 4.0 * np.pi), (-8.0, 8.0), 1.0, 0.5,
                          ScaleField("constant", 1.0), alpha=0.05, eval_times=(0.5, 1.0))
    elif problem_id == "riemann":
        p = ProblemConfig("riemann", (0.0, 1.0), (-6.0, 6.0), 0.2, 2.0 * np.pi,
                          ScaleField("constant", 0.001), equilibrium_start=True, eval_times=(0.0, 0.2))
    elif problem_id == "mixing":
        p = ProblemConfig("mixing", (-1.0, 1.0), (-6.0, 6.0), 0.2, np.pi,
                          ScaleField("mixing", 0.001), equilibrium_start=True, eval_times=(0.0, 0.1, 0.2))
    elif problem_id == "gravitational":
        p = ProblemConfig("gravitational", (0.0, 4.0 * np.pi), (-6.0, 6.0), 0.5, 0.5,
                          ScaleField("constant", 0.001), field_law="gravity", alpha=0.05,
                          eval_times=(0.2, 0.5),
                          notes={"field_law": "d_x phi = rho - h used as the field residual"})
    elif problem_id == "uq":
        p = ProblemConfig("uq", (0.0, 1.0), (-6.0, 6.0), 0.1, 2.0 * np.pi,
                          ScaleField("constant", 0.001), n_uq=10, equilibrium_start=True,
                          eval_times=(0.05, 0.1))
    else:
        raise ConfigError(f"unknown problem {problem_id!r}; expected one of {PROBLEMS}")
    if eps is not None:
        p = p.with_eps(eps)
    if t_final is not None:
        if t_final <= 0:
            raise ConfigError("t_final must be positive")
        p = ProblemConfig(p.id, p.domain, p.omega, float(t_final), p.k, p.scale, p.field_law, p.n_uq,
                          p.alpha, p.equilibrium_start, p.eval_times, dict(p.notes))
    return p


def _eps_key(eps, table):
    keys = sorted(table)
    return min(keys, key=lambda e: abs(np.log10(max(e, 1e-12)) - np.log10(max(eps, 1e-12))))


# default weights per regime; the nearest regime in log10(eps) is used for other eps
_PENALTIES = {
    ("landau", "mm"): {1.0: {"residual": 300.0, "ic": 1.0}, 0.5: {"residual": 0.5, "ic": 1.0},
                       0.01: {"residual": 0.5, "ic": 1.0}},
    ("landau", "mc"): {1.0: {"residual": 120.0, "ic": 1.0, "conservation": 1.0},
                       0.5: {"residual": 150.0, "ic": 1.0, "conservation": 1.0},
                       0.01: {"residual": 500.0, "ic": 1.0, "conservation": 1.0}},
    ("landau", "pinn"): {1.0: {"residual": 30.0, "ic": 1.0}, 0.5: {"residual": 50.0, "ic": 1.0},
                         0.01: {"residual": 100.0, "ic": 1.0}},
    ("bump_on_tail", "mm"): {1.0: {"residual": 50.0, "ic": 1.0}, 0.3: {"residual": 1.0, "ic": 1000.0},
                             0.001: {"residual": 1.0, "ic": 1000.0}},
    ("bump_on_tail", "mc"): {1.0: {"residual": 50.0, "ic": 1.0, "conservation": 1.0}},
    ("riemann", "mm"): {0.001: {"residual": 1.0, "residual_macro": 5.0, "residual_micro": 5.0,
                                "ic": 5.0}},
    ("riemann", "mc"): {0.001: {"residual": 1.0, "ic": 1.0, "ic_rho": 3.0, "ic_f": 1000.0,
                                "conservation": 1.0}},
    ("mixing", "mm"): {0.001: {"residual": 0.1, "ic": 1.0}},
    ("mixing", "mc"): {0.001: {"residual": 1.0, "ic": 1.0, "conservation": 1.0}},
    ("gravitational", "mm"): {0.001: {"residual": 1.0, "ic": 1.0}},
    ("gravitational", "mc"): {0.001: {"residual": 50.0, "ic": 1.0, "conservation": 1.0}},
    ("uq", "mm"): {1.0: {"residual": 50.0, "ic": 1.0}, 0.001: {"residual": 1.0, "ic": 1.0}},
    ("uq", "mc"): {1.0: {"residual": 100.0, "ic": 1.0, "conservation": 1.0},
                   0.001: {"residual": 100.0, "ic": 1.0, "conservation": 1.0}},
}


def default_penalties(problem_id, method, eps):
    """Default penalty weights for the regime, as a mapping accepted by PenaltyConfig."""
    table = _PENALTIES.get((problem_id, method))
    if table is None:
        return {"residual": 1.0, "ic": 1.0, "conservation": 1.0}
    return dict(table[_eps_key(float(eps), table)])


def neutrality_gap(problem, nx=4096, nv=None, z=None):
    """| int int f0 dx dv - int h dx | by midpoint in x and Gauss-Legendre in v."""
    from ..quadrature import gauss_legendre
    rule = gauss_legendre(nv or 64, problem.omega)
    dx = problem.length / nx
    x = problem.domain[0] + (np.arange(nx) + 0.5) * dx
    zz = None
    if problem.n_uq:
        zz = np.broadcast_to(np.zeros(problem.n_uq) if z is None else np.asarray(z), (nx, problem.n_uq))
    mass = (problem.f0(x, rule.nodes, zz) @ rule.weights).sum() * dx
    return abs(mass - problem.background(x, zz).sum() * dx)
