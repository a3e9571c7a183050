"""Limit-system losses assembled in plain numpy from the eps = 0 residuals.

Cross-check for the asymptotic-preserving property: on the same networks
and batch, these must agree with the empirical losses evaluated with a zero
scale field.  Only network evaluation is shared with ``losses``.
"""
from __future__ import annotations

import numpy as np

from .model import eval_jet
from .physics.limit import limit_residual_mass_conservation, limit_residual_micro_macro


def _np(part):
    return np.asarray(part.data if hasattr(part, "data") else part, dtype=float)


def _ms(r):
    return float(np.mean(r * r))


def _vms(rule, r):
    return float(np.mean((r * r) @ rule.weights) / rule.length)


def limit_loss_mm(nets, batch, problem, penalties, rule, inputs):
    p = penalties
    h = problem.background(batch.x, batch.z)
    rho = eval_jet(nets["rho"], inputs, batch.t, batch.x, batch.z, which=("t", "x"))
    g = eval_jet(nets["g"], inputs, batch.t, batch.x, batch.z, which=("t", "x", "v", "vv"), rule=rule)
    phi = eval_jet(nets["phi"], inputs, batch.t, batch.x, batch.z, which=("x", "xx", "tx"))
    macro, micro, field = limit_residual_micro_macro(rho, g, phi, rule, h, problem.field_law)
    out = {"residual_macro": p.residual_macro * _ms(macro),
           "residual_micro": p.residual_micro * _vms(rule, micro),
           "residual_poisson": p.residual_poisson * _ms(field)}
    x, z, t = batch.ic_x, batch.ic_z, np.zeros_like(batch.ic_x)
    rho0 = _np(eval_jet(nets["rho"], inputs, t, x, z).value)
    phi0 = _np(eval_jet(nets["phi"], inputs, t, x, z).value)
    out["ic_rho"] = p.ic_rho * _ms(rho0 - problem.rho0(x, z))
    out["ic_phi"] = p.ic_phi * _ms(phi0 - problem.phi0(x, z))
    if p.ic_g > 0:
        g0 = _np(eval_jet(nets["g"], inputs, t, x, z, rule=rule).value)
        out["ic_g"] = p.ic_g * _vms(rule, g0 - problem.initial_g(x, rule.nodes, z))
    else:
        out["ic_g"] = 0.0
    return out


def limit_loss_mc(nets, batch, problem, penalties, rule, inputs):
    p = penalties
    h = problem.background(batch.x, batch.z)
    rho = eval_jet(nets["rho"], inputs, batch.t, batch.x, batch.z, which=("t",))
    f = eval_jet(nets["f"], inputs, batch.t, batch.x, batch.z, v=rule.nodes, which=("t", "x", "v", "vv"))
    phi = eval_jet(nets["phi"], inputs, batch.t, batch.x, batch.z, which=("x", "xx"))
    macro, kinetic, field, _ = limit_residual_mass_conservation(rho, f, phi, rule, h, problem.field_law)
    out = {"residual_macro": p.residual_macro * _ms(macro),
           "residual_kinetic": p.residual_kinetic * _vms(rule, kinetic),
           "residual_poisson": p.residual_poisson * _ms(field)}
    x, z, t = batch.ic_x, batch.ic_z, np.zeros_like(batch.ic_x)
    out["ic_rho"] = p.ic_rho * _ms(_np(eval_jet(nets["rho"], inputs, t, x, z).value) - problem.rho0(x, z))
    f0 = _np(eval_jet(nets["f"], inputs, t, x, z, v=rule.nodes).value)
    out["ic_f"] = p.ic_f * _vms(rule, f0 - problem.f0(x, rule.nodes, z))
    out["ic_phi"] = p.ic_phi * _ms(_np(eval_jet(nets["phi"], inputs, t, x, z).value) - problem.phi0(x, z))
    ct, cx, cz = batch.cons_t, batch.cons_x, batch.cons_z
    fc = _np(eval_jet(nets["f"], inputs, ct, cx, cz, v=rule.nodes).value)
    rc = _np(eval_jet(nets["rho"], inputs, ct, cx, cz).value)
    out["conservation"] = p.conservation * _ms(np.einsum("bi,i->b", fc, rule.weights) - rc)
    return out
