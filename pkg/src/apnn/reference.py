"""Finite-difference reference solutions on a periodic x-grid.

Kinetic solver, one step of length dt (first-order splitting):
  1. explicit upwind transport  f_t + v f_x = 0              (|v|max dt/dx <= 0.9)
  2. field from rho = trapezoid sum of f over the v-nodes  (periodic Poisson or the gravity law)
  3. implicit Fokker-Planck step f_t = (1/eps) d_v[(v + phi_x) f + d_v f],
     Chang-Cooper (Scharfetter-Gummel) face fluxes, zero flux at the v-boundary,
     one tridiagonal solve per x column.

Velocity nodes include both ends of Omega; node j owns the control volume
c_j dv with c = (1/2, 1, ..., 1, 1/2), so the conserved mass is exactly the
trapezoid sum.  The implicit matrix, weighted by c, has unit column sums (mass is conserved to rounding),
is an M-matrix (so f stays nonnegative) and annihilates the sampled shifted
Maxwellian exactly, which makes the step stable and consistent for any eps.

Limit solver: conservative upwind for rho_t + d_x(rho E) = 0, E = -phi_x, with
face velocities E_{i+1/2} = -(phi_{i+1} - phi_i)/dx.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GaugeError, MissingInputError, NumericError

NEUTRALITY_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    nx: int
    nv: int
    domain: tuple
    omega: tuple
    cfl: float = 0.9
    dt_max: float | None = None  # overrides the CFL step when smaller

    def __post_init__(self):
        if self.nx < 4 or self.nv < 2:
            raise ConfigError(f"grid too small: nx={self.nx}, nv={self.nv}")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")

    @property
    def dx(self):
        return (self.domain[1] - self.domain[0]) / self.nx

    @property
    def dv(self):
        return (self.omega[1] - self.omega[0]) / (self.nv - 1)

    @property
    def x(self):
        return self.domain[0] + self.dx * np.arange(self.nx)

    @property
    def v(self):
        return self.omega[0] + self.dv * np.arange(self.nv)

    @property
    def v_weights(self):
        """Trapezoid weights on the v-nodes."""
        return trapezoid_weights(self.nv, self.dv)

    def kinetic_dt(self):
        dt = self.cfl * self.dx / np.max(np.abs(self.v))
        return dt if self.dt_max is None else min(dt, self.dt_max)


def make_grid(problem, nx=256, nv=128, cfl=0.9, dt_max=None):
    return Grid(int(nx), int(nv), tuple(problem.domain), tuple(problem.omega), float(cfl), dt_max)


@dataclass
class GridSolution:
    """Snapshots at ``times``; ``f`` is None for the limit solver."""

    kind: str
    x: np.ndarray
    times: np.ndarray
    rho: np.ndarray
    phi: np.ndarray
    E: np.ndarray
    flux: np.ndarray
    v: np.ndarray | None = None
    f: np.ndarray | None = None
    energy_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    energy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    meta: dict = field(default_factory=dict)

    @property
    def dx(self):
        return self.x[1] - self.x[0]

    def index(self, t, tol=1e-9):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol:
            raise MissingInputError(f"no snapshot at t={t}; available {self.times.tolist()}")
        return i

    def mass(self):
        return self.rho.sum(axis=1) * self.dx


# -- field solves ---------------------------------------------------------------

def solve_poisson_periodic(rho_minus_h, dx):
    """-D2 phi = rho - h with the discrete 3-point Laplacian, zero-mean phi.

    Returns (phi, E) with E = -(phi_{i+1} - phi_{i-1}) / (2 dx) at the nodes.
    """
    s = np.asarray(rho_minus_h, dtype=float)
    n = s.shape[-1]
    charge = s.sum(axis=-1) * dx
    if np.any(np.abs(charge) > NEUTRALITY_TOL * max(1.0, n * dx)):
        raise GaugeError(f"net charge {np.max(np.abs(charge)):.3e} != 0: no periodic solution")
    m = np.arange(n // 2 + 1)
    lam = (2.0 - 2.0 * np.cos(2.0 * np.pi * m / n)) / dx**2
    sh = np.fft.rfft(s, axis=-1)
    lam[0] = 1.0
    ph = sh / lam
    ph[..., 0] = 0.0
    phi = np.fft.irfft(ph, n=n, axis=-1)
    E = -(np.roll(phi, -1, axis=-1) - np.roll(phi, 1, axis=-1)) / (2.0 * dx)
    return phi, E


def solve_gravity_periodic(rho_minus_h, dx):
    """d_x phi = rho - h: E = -(rho - h) at the nodes, phi the zero-mean spectral antiderivative."""
    s = np.asarray(rho_minus_h, dtype=float)
    n = s.shape[-1]
    charge = s.sum(axis=-1) * dx
    if np.any(np.abs(charge) > NEUTRALITY_TOL * max(1.0, n * dx)):
        raise GaugeError(f"net mass excess {np.max(np.abs(charge)):.3e} != 0: no periodic solution")
    kx = 2.0 * np.pi * np.fft.rfftfreq(n, d=dx)
    sh = np.fft.rfft(s, axis=-1)
    kx[0] = 1.0
    ph = sh / (1j * kx)
    ph[..., 0] = 0.0
    return np.fft.irfft(ph, n=n, axis=-1), -s


def _field(problem, rho, h, dx):
    if problem.field_law == "gravity":
        return solve_gravity_periodic(rho - h, dx)
    return solve_poisson_periodic(rho - h, dx)


def electric_energy(E, dx):
    """sqrt(sum E^2 dx) over the last axis."""
    E = np.asarray(E, dtype=float)
    return np.sqrt(np.sum(E * E, axis=-1) * dx)


# -- Fokker-Planck column solve ---------------------------------------------------

def bernoulli(w):
    """w / (exp(w) - 1), with the removable singularity at 0."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < 1e-8
    safe = np.where(small, 1.0, w)
    return np.where(small, 1.0 - 0.5 * w, safe / np.expm1(safe))


def trapezoid_weights(nv, dv):
    w = np.full(nv, float(dv))
    w[[0, -1]] *= 0.5
    return w


def fokker_planck_step(f, v, dv, dphi_dx, dt_over_eps):
    """Implicit Chang-Cooper step for every x column; f has shape (nx, nv) on end-inclusive v-nodes."""
    nx, nv = f.shape
    vf = 0.5 * (v[:-1] + v[1:])
    w = dv * (vf[None, :] + np.asarray(dphi_dx, dtype=float)[:, None])  # (nx, nv - 1)
    lam = (np.asarray(dt_over_eps, dtype=float) * np.ones(nx))[:, None] / dv**2
    # face flux F_{j+1/2} = (A_j f_{j+1} - B_j f_j) / dv
    a = lam * bernoulli(-w)
    b = lam * bernoulli(w)
    inv_c = np.ones(nv)
    inv_c[[0, -1]] = 2.0  # half control volumes at the ends of Omega
    diag = np.zeros((nx, nv))
    diag[:, :-1] += b
    diag[:, 1:] += a
    diag = 1.0 + diag * inv_c
    upper = -a * inv_c[:-1]   # coefficient of f_{j+1} in row j
    lower = -b * inv_c[1:]    # coefficient of f_{j-1} in row j (index j - 1)
    return _thomas(lower, diag, upper, f)


def _thomas(lower, diag, upper, rhs):
    nx, n = rhs.shape
    c = np.empty((nx, n - 1))
    d = np.empty((nx, n))
    beta = diag[:, 0].copy()
    if np.any(beta == 0):
        raise NumericError("tridiagonal solve broke down")
    c[:, 0] = upper[:, 0] / beta
    d[:, 0] = rhs[:, 0] / beta
    for j in range(1, n):
        beta = diag[:, j] - lower[:, j - 1] * c[:, j - 1]
        if np.any(beta == 0):
            raise NumericError("tridiagonal solve broke down")
        if j < n - 1:
            c[:, j] = upper[:, j] / beta
        d[:, j] = (rhs[:, j] - lower[:, j - 1] * d[:, j - 1]) / beta
    out = np.empty_like(d)
    out[:, -1] = d[:, -1]
    for j in range(n - 2, -1, -1):
        out[:, j] = d[:, j] - c[:, j] * out[:, j + 1]
    return out


def upwind_transport(f, v, dt, dx):
    """One explicit first-order upwind step of f_t + v f_x = 0 (periodic in x, axis 0)."""
    nu = v * (dt / dx)
    pos = np.maximum(nu, 0.0)[None, :]
    neg = np.minimum(nu, 0.0)[None, :]
    back = f - np.roll(f, 1, axis=0)
    fwd = np.roll(f, -1, axis=0) - f
    return f - pos * back - neg * fwd


def _step_plan(times, dt_max):
    """Steps per segment so that every requested time is hit exactly."""
    plan, prev = [], 0.0
    for t in times:
        seg = t - prev
        if seg < -1e-14:
            raise ConfigError("save times must be nondecreasing and >= 0")
        n = int(math.ceil(seg / dt_max - 1e-12)) if seg > 0 else 0
        plan.append((n, seg / n if n else 0.0))
        prev = t
    return plan


def _save_times(problem, times):
    if times is None:
        times = sorted(set([0.0, *problem.eval_times, problem.t_final]))
    times = np.asarray(sorted(set(float(t) for t in times)), dtype=float)
    if times[0] < 0:
        raise ConfigError("save times must be >= 0")
    return times


def initial_distribution(problem, grid):
    """f0 on the grid with each column rescaled so its trapezoid mass is rho0(x)."""
    x, v = grid.x, grid.v
    f = problem.f0(x, v)
    mass = f @ grid.v_weights
    return f * (problem.rho0(x) / mass)[:, None]


def solve_kinetic(problem, grid, times=None, keep_f=True):
    """Kinetic reference with the problem's scale field; deterministic source (z-average)."""
    times = _save_times(problem, times)
    x, v, dx, dv = grid.x, grid.v, grid.dx, grid.dv
    tw = grid.v_weights
    eps = problem.eps(x)
    if np.any(eps <= 0):
        raise ConfigError("the kinetic solver needs eps > 0; use solve_limit for eps = 0")
    h = problem.background(x)
    f = initial_distribution(problem, grid)
    rho = f @ tw
    phi, E = _field(problem, rho, h, dx)
    snaps = {k: [] for k in ("rho", "phi", "E", "flux", "f")}
    energy_t, energy = [0.0], [float(electric_energy(E, dx))]
    t = 0.0

    def record():
        snaps["rho"].append(rho.copy())
        snaps["phi"].append(phi.copy())
        snaps["E"].append(E.copy())
        snaps["flux"].append(f @ (v * tw))
        if keep_f:
            snaps["f"].append(f.copy())

    for nsteps, dt in _step_plan(times, grid.kinetic_dt()):
        for _ in range(nsteps):
            f = upwind_transport(f, v, dt, dx)
            rho = f @ tw
            phi, E = _field(problem, rho, h, dx)
            f = fokker_planck_step(f, v, dv, -E, dt / eps)
            rho = f @ tw
            t += dt
            energy_t.append(t)
            energy.append(float(electric_energy(E, dx)))
            if not np.all(np.isfinite(f)):
                raise NumericError(f"kinetic solution became non-finite at t={t:.4g}")
        record()
    return GridSolution("kinetic", x, times, np.array(snaps["rho"]), np.array(snaps["phi"]),
                        np.array(snaps["E"]), np.array(snaps["flux"]), v,
                        np.array(snaps["f"]) if keep_f else None, np.array(energy_t), np.array(energy),
                        {"nx": grid.nx, "nv": grid.nv, "dt": grid.kinetic_dt(), "cfl": grid.cfl,
                         "eps0": problem.scale.eps0, "scale": problem.scale.kind,
                         "field_law": problem.field_law})


def _face_velocity(problem, phi, rho, h, dx):
    if problem.field_law == "gravity":
        s = rho - h
        return -0.5 * (s + np.roll(s, -1))
    return -(np.roll(phi, -1) - phi) / dx


def solve_limit(problem, grid, times=None, dt=None):
    """High-field limit reference rho_t - d_x(rho phi_x) = 0 with the field law.

    ``dt`` fixes the step (for self-convergence studies); otherwise the step
    adapts to 0.9 dx / max|E_face| and is capped by grid.dt_max.
    """
    times = _save_times(problem, times)
    x, dx = grid.x, grid.dx
    h = problem.background(x)
    rho = problem.rho0(x)
    phi, E = _field(problem, rho, h, dx)
    snaps = {k: [] for k in ("rho", "phi", "E", "flux")}
    energy_t, energy = [0.0], [float(electric_energy(E, dx))]
    t = 0.0
    for target in times:
        while t < target - 1e-13:
            u = _face_velocity(problem, phi, rho, h, dx)
            if dt is None:
                step = grid.cfl * dx / max(np.max(np.abs(u)), 1e-12)
                if grid.dt_max is not None:
                    step = min(step, grid.dt_max)
            else:
                step = dt
            step = min(step, target - t)
            if dt is not None and np.max(np.abs(u)) * step / dx > 1.0:
                raise NumericError("fixed time step violates the CFL condition")
            flux = np.maximum(u, 0.0) * rho + np.minimum(u, 0.0) * np.roll(rho, -1)
            rho = rho - step / dx * (flux - np.roll(flux, 1))
            phi, E = _field(problem, rho, h, dx)
            t += step
            energy_t.append(t)
            energy.append(float(electric_energy(E, dx)))
        snaps["rho"].append(rho.copy())
        snaps["phi"].append(phi.copy())
        snaps["E"].append(E.copy())
        snaps["flux"].append(rho * E)
    return GridSolution("limit", x, times, np.array(snaps["rho"]), np.array(snaps["phi"]),
                        np.array(snaps["E"]), np.array(snaps["flux"]), None, None,
                        np.array(energy_t), np.array(energy),
                        {"nx": grid.nx, "cfl": grid.cfl, "dt": dt, "field_law": problem.field_law})


# -- serialisation -------------------------------------------------------------------

CSV_FIELDS = ("t", "x", "rho", "phi", "E", "flux")


def write_solution(sol, directory):
    """solution.csv (t,x,rho,phi,E,flux), energy.csv, and f.npz for kinetic runs."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "solution.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for k, t in enumerate(sol.times):
            for i, xi in enumerate(sol.x):
                w.writerow([repr(float(t)), repr(float(xi)), repr(float(sol.rho[k, i])),
                            repr(float(sol.phi[k, i])), repr(float(sol.E[k, i])),
                            repr(float(sol.flux[k, i]))])
    with open(os.path.join(directory, "energy.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "energy"))
        for t, e in zip(sol.energy_t, sol.energy):
            w.writerow([repr(float(t)), repr(float(e))])
    if sol.f is not None:
        np.savez(os.path.join(directory, "f.npz"), t=sol.times, x=sol.x, v=sol.v, f=sol.f)


def read_solution(directory):
    path = os.path.join(directory, "solution.csv")
    if not os.path.exists(path):
        raise MissingInputError(f"reference solution not found: {path}")
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(rows[:, 0])
    x = rows[rows[:, 0] == times[0], 1]
    shape = (len(times), len(x))
    cols = {name: rows[:, i].reshape(shape) for i, name in enumerate(CSV_FIELDS)}
    energy_t = energy = np.zeros(0)
    epath = os.path.join(directory, "energy.csv")
    if os.path.exists(epath):
        e = np.loadtxt(epath, delimiter=",", skiprows=1, ndmin=2)
        energy_t, energy = e[:, 0], e[:, 1]
    v = f = None
    fpath = os.path.join(directory, "f.npz")
    kind = "limit"
    if os.path.exists(fpath):
        with np.load(fpath) as data:
            v, f = data["v"], data["f"]
        kind = "kinetic"
    return GridSolution(kind, x, times, cols["rho"], cols["phi"], cols["E"], cols["flux"], v, f,
                        energy_t, energy)
