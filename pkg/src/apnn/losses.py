"""Empirical losses for the micro-macro (mm), mass-conservation (mc) and vanilla (pinn) formulations.

Velocity integrals inside each term use the quadrature rule: a kinetic
residual r(t, x, v) contributes (1/|Omega|) sum_i w_i r(t, x, v_i)^2 averaged
over the sampled (t, x) points.  Every term is reported already weighted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .autodiff import tape
from .autodiff.tape import Var
from .errors import ConfigError, NumericOverflowError
from .model import NET_ROLES, check_method, eval_jet
from .physics import residuals
from .physics.fields import INV_SQRT_2PI

TERMS = {
    "mm": ("residual_macro", "residual_micro", "residual_poisson", "ic_rho", "ic_g", "ic_phi",
           "ic_reconstructed_f", "bc_rho", "bc_g", "bc_phi"),
    "mc": ("residual_macro", "residual_kinetic", "residual_poisson", "ic_rho", "ic_f", "ic_phi",
           "conservation", "bc_rho", "bc_f", "bc_phi"),
    "pinn": ("residual_kinetic", "residual_poisson", "ic_f", "ic_phi", "bc_f", "bc_phi"),
}
_GROUPS = {"residual": ("residual_macro", "residual_micro", "residual_kinetic", "residual_poisson"),
           "ic": ("ic_rho", "ic_g", "ic_f", "ic_phi"),
           "bc": ("bc_rho", "bc_g", "bc_f", "bc_phi")}


class PenaltyConfig(BaseModel):
    """Loss weights.  Group keys ``residual``, ``ic``, ``bc`` set every member not given explicitly.

    ``ic_reconstructed_f`` (mm only, not part of the ``ic`` group) penalises
    rho M + eps g - f0 at t = 0 in addition to the rho/g/phi terms.
    """

    model_config = ConfigDict(extra="forbid")

    residual_macro: float = Field(1.0, ge=0)
    residual_micro: float = Field(1.0, ge=0)
    residual_kinetic: float = Field(1.0, ge=0)
    residual_poisson: float = Field(1.0, ge=0)
    ic_rho: float = Field(1.0, ge=0)
    ic_g: float = Field(1.0, ge=0)
    ic_f: float = Field(1.0, ge=0)
    ic_phi: float = Field(1.0, ge=0)
    ic_reconstructed_f: float = Field(0.0, ge=0)
    bc_rho: float = Field(0.0, ge=0)
    bc_g: float = Field(0.0, ge=0)
    bc_f: float = Field(0.0, ge=0)
    bc_phi: float = Field(0.0, ge=0)
    conservation: float = Field(1.0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _expand_groups(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        for group, members in _GROUPS.items():
            if group in data:
                value = data.pop(group)
                for m in members:
                    data.setdefault(m, value)
        return data

    def weight(self, term):
        return float(getattr(self, term))

    def scaled(self, term, c):
        return self.model_copy(update={term: getattr(self, term) * c})


class BatchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_domain: int = Field(512, ge=1)
    n_ic: int = Field(256, ge=0)
    n_bc: int = Field(0, ge=0)
    n_conservation: int = Field(256, ge=0)


@dataclass
class SampleBatch:
    """Uniform samples; arrays of z are None for deterministic problems."""

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray | None
    ic_x: np.ndarray
    ic_z: np.ndarray | None
    bc_t: np.ndarray
    bc_z: np.ndarray | None
    cons_t: np.ndarray
    cons_x: np.ndarray
    cons_z: np.ndarray | None

    @property
    def ic_t(self):
        return np.zeros_like(self.ic_x)


def sample_batch(problem, config, rng):
    """Fresh i.i.d. uniform samples over T x D (x [-1, 1]^n_uq)."""
    t0, t1 = 0.0, float(problem.t_final)
    a, b = problem.domain
    if not (t1 > t0 and b > a):
        raise ConfigError("sampling region is empty")
    nz = problem.n_uq

    def z(n):
        return rng.uniform(-1.0, 1.0, size=(n, nz)) if nz else None

    n1, n3, n2, n4 = config.n_domain, config.n_ic, config.n_bc, config.n_conservation
    t = rng.uniform(t0, t1, n1)
    x = rng.uniform(a, b, n1)
    zd = z(n1)
    ic_x = rng.uniform(a, b, n3)
    ic_z = z(n3)
    bc_t = rng.uniform(t0, t1, n2)
    bc_z = z(n2)
    cons_t = rng.uniform(t0, t1, n4)
    cons_x = rng.uniform(a, b, n4)
    cons_z = z(n4)
    return SampleBatch(t, x, zd, ic_x, ic_z, bc_t, bc_z, cons_t, cons_x, cons_z)


# -- term helpers ------------------------------------------------------------

def mean_square(r):
    return tape.mean(tape.square(r))


def velocity_mean_square(rule, r):
    """mean over points of (1/|Omega|) sum_i w_i r_i^2."""
    return tape.mean(tape.sum_(tape.square(r) * (rule.weights / rule.length), axis=-1))


def _zero():
    return Var(np.zeros(()))


class _Terms:
    def __init__(self, method, penalties):
        self.method = method
        self.penalties = penalties
        self.out = {}

    def wants(self, name):
        return self.penalties.weight(name) > 0

    def add(self, name, fn):
        w = self.penalties.weight(name)
        self.out[name] = fn() * w if w > 0 else _zero()


def _jets(nets, inputs, rule, t, x, z, needs):
    out = {}
    for name, which in needs.items():
        out[name] = eval_jet(nets[name], inputs, t, x, z, which=which, rule=rule)
    return out


def _values(nets, inputs, rule, t, x, z, names):
    return {n: eval_jet(nets[n], inputs, t, x, z, which=("value",), rule=rule).value for n in names}


def _kinetic_value(nets, name, inputs, rule, t, x, z):
    # velocity-dependent networks without the zero-mean head still need the nodes
    return eval_jet(nets[name], inputs, t, x, z, v=rule.nodes, which=("value",), rule=rule).value


def _bc_terms(terms, nets, inputs, rule, problem, batch, names):
    if inputs.features is not None or batch.bc_t.size == 0:
        for n in names:
            terms.out.setdefault("bc_" + n, _zero())
        return
    a, b = problem.domain
    ta = batch.bc_t
    xa, xb = np.full_like(ta, a), np.full_like(ta, b)
    for n in names:
        if not terms.wants("bc_" + n):
            terms.out["bc_" + n] = _zero()
            continue
        kinetic = NET_ROLES[terms.method][n][1]
        if kinetic:
            ua = _kinetic_value(nets, n, inputs, rule, ta, xa, batch.bc_z)
            ub = _kinetic_value(nets, n, inputs, rule, ta, xb, batch.bc_z)
            terms.add("bc_" + n, lambda: velocity_mean_square(rule, ua - ub))
        else:
            ua = eval_jet(nets[n], inputs, ta, xa, batch.bc_z).value
            ub = eval_jet(nets[n], inputs, ta, xb, batch.bc_z).value
            terms.add("bc_" + n, lambda: mean_square(ua - ub))


def empirical_loss_mm(nets, batch, problem, penalties, rule, inputs):
    """Weighted term dict for the micro-macro loss (tape nodes)."""
    terms = _Terms("mm", penalties)
    eps = problem.eps(batch.x)
    h = problem.background(batch.x, batch.z)
    if any(terms.wants(n) for n in ("residual_macro", "residual_micro", "residual_poisson")):
        j = _jets(nets, inputs, rule, batch.t, batch.x, batch.z,
                  {"rho": ("t", "x"), "g": ("t", "x", "v", "vv"), "phi": ("x", "xx", "tx")})
        macro, micro, poisson = residuals.residual_micro_macro(
            j["rho"], j["g"], j["phi"], rule, eps, h, problem.field_law)
        terms.add("residual_macro", lambda: mean_square(macro))
        terms.add("residual_micro", lambda: velocity_mean_square(rule, micro))
        terms.add("residual_poisson", lambda: mean_square(poisson))
    else:
        for n in ("residual_macro", "residual_micro", "residual_poisson"):
            terms.out[n] = _zero()
    _mm_initial(terms, nets, batch, problem, rule, inputs)
    _bc_terms(terms, nets, inputs, rule, problem, batch, ("rho", "g", "phi"))
    return terms.out


def _mm_initial(terms, nets, batch, problem, rule, inputs):
    x, z, t = batch.ic_x, batch.ic_z, batch.ic_t
    if x.size == 0:
        for n in ("ic_rho", "ic_g", "ic_phi", "ic_reconstructed_f"):
            terms.out[n] = _zero()
        return
    vals = _values(nets, inputs, rule, t, x, z, ("rho", "g", "phi"))
    terms.add("ic_rho", lambda: mean_square(vals["rho"] - problem.rho0(x, z)))
    terms.add("ic_phi", lambda: mean_square(vals["phi"] - problem.phi0(x, z)))
    if terms.wants("ic_g"):
        g0 = problem.initial_g(x, rule.nodes, z)
        terms.add("ic_g", lambda: velocity_mean_square(rule, vals["g"] - g0))
    else:
        terms.out["ic_g"] = _zero()
    if terms.wants("ic_reconstructed_f"):
        eps = problem.eps(x)[:, None]
        phi_x = eval_jet(nets["phi"], inputs, t, x, z, which=("x",)).d_x
        shift = phi_x.reshape(phi_x.shape + (1,)) + rule.nodes
        m = tape.exp(tape.square(shift) * -0.5) * INV_SQRT_2PI
        f = vals["rho"].reshape(vals["rho"].shape + (1,)) * m + eps * vals["g"]
        f0 = problem.f0(x, rule.nodes, z)
        terms.add("ic_reconstructed_f", lambda: velocity_mean_square(rule, f - f0))
    else:
        terms.out["ic_reconstructed_f"] = _zero()


def empirical_loss_mc(nets, batch, problem, penalties, rule, inputs):
    """Weighted term dict for the mass-conservation loss (tape nodes)."""
    terms = _Terms("mc", penalties)
    eps = problem.eps(batch.x)
    h = problem.background(batch.x, batch.z)
    if any(terms.wants(n) for n in ("residual_macro", "residual_kinetic", "residual_poisson")):
        j = _jets(nets, inputs, rule, batch.t, batch.x, batch.z,
                  {"rho": ("t",), "phi": ("x", "xx")})
        j["f"] = eval_jet(nets["f"], inputs, batch.t, batch.x, batch.z, v=rule.nodes,
                          which=("t", "x", "v", "vv"), rule=rule)
        macro, kinetic, poisson, _ = residuals.residual_mass_conservation(
            j["rho"], j["f"], j["phi"], rule, eps, h, problem.field_law)
        terms.add("residual_macro", lambda: mean_square(macro))
        terms.add("residual_kinetic", lambda: velocity_mean_square(rule, kinetic))
        terms.add("residual_poisson", lambda: mean_square(poisson))
    else:
        for n in ("residual_macro", "residual_kinetic", "residual_poisson"):
            terms.out[n] = _zero()
    _kinetic_initial(terms, nets, batch, problem, rule, inputs, ("rho", "f", "phi"))
    if terms.wants("conservation") and batch.cons_t.size:
        f = _kinetic_value(nets, "f", inputs, rule, batch.cons_t, batch.cons_x, batch.cons_z)
        rho = eval_jet(nets["rho"], inputs, batch.cons_t, batch.cons_x, batch.cons_z).value
        mass = tape.sum_(f * rule.weights, axis=-1)
        terms.add("conservation", lambda: mean_square(mass - rho))
    else:
        terms.out["conservation"] = _zero()
    _bc_terms(terms, nets, inputs, rule, problem, batch, ("rho", "f", "phi"))
    return terms.out


def _kinetic_initial(terms, nets, batch, problem, rule, inputs, names):
    x, z, t = batch.ic_x, batch.ic_z, batch.ic_t
    for n in names:
        key = "ic_" + n
        if not terms.wants(key) or x.size == 0:
            terms.out[key] = _zero()
            continue
        if n == "f":
            f = _kinetic_value(nets, "f", inputs, rule, t, x, z)
            f0 = problem.f0(x, rule.nodes, z)
            terms.add(key, lambda: velocity_mean_square(rule, f - f0))
        else:
            u = eval_jet(nets[n], inputs, t, x, z).value
            target = problem.rho0(x, z) if n == "rho" else problem.phi0(x, z)
            terms.add(key, lambda: mean_square(u - target))


def empirical_loss_pinn(nets, batch, problem, penalties, rule, inputs):
    """Weighted term dict for the vanilla loss (tape nodes)."""
    terms = _Terms("pinn", penalties)
    eps = problem.eps(batch.x)
    h = problem.background(batch.x, batch.z)
    if terms.wants("residual_kinetic") or terms.wants("residual_poisson"):
        phi = eval_jet(nets["phi"], inputs, batch.t, batch.x, batch.z, which=("x", "xx"))
        f = eval_jet(nets["f"], inputs, batch.t, batch.x, batch.z, v=rule.nodes,
                     which=("t", "x", "v", "vv"), rule=rule)
        vlasov, poisson = residuals.residual_vanilla(f, phi, rule, eps, h, problem.field_law)
        terms.add("residual_kinetic", lambda: velocity_mean_square(rule, vlasov))
        terms.add("residual_poisson", lambda: mean_square(poisson))
    else:
        terms.out["residual_kinetic"] = terms.out["residual_poisson"] = _zero()
    _kinetic_initial(terms, nets, batch, problem, rule, inputs, ("f", "phi"))
    _bc_terms(terms, nets, inputs, rule, problem, batch, ("f", "phi"))
    return terms.out


LOSSES = {"mm": empirical_loss_mm, "mc": empirical_loss_mc, "pinn": empirical_loss_pinn}


def empirical_loss(method, nets, batch, problem, penalties, rule, inputs):
    check_method(method)
    terms = LOSSES[method](nets, batch, problem, penalties, rule, inputs)
    return {name: terms[name] for name in TERMS[method]}


def total(terms):
    out = None
    for term in terms.values():
        out = term if out is None else out + term
    return out


def loss_report(method, nets, batch, problem, penalties, rule, inputs):
    """Per-term weighted values and their sum; raises on a non-finite term."""
    terms = empirical_loss(method, nets, batch, problem, penalties, rule, inputs)
    report = {}
    for name, term in terms.items():
        value = float(term.data)
        if not np.isfinite(value):
            raise NumericOverflowError(f"loss term {name!r} is not finite ({value})", term=name)
        report[name] = value
    report["total"] = float(total(terms).data)
    return report
