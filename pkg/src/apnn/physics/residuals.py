"""Pointwise residuals of the scaled kinetic system for the three formulations.

All functions take jets already evaluated at a batch: macroscopic jets with
shape (B,), kinetic jets with shape (B, n) on the velocity nodes of ``rule``.
``eps`` and ``background`` are per-point arrays (B,) or scalars.

Required jet components:
    rho: t, x (micro-macro) or t (mass conservation)
    g, f: t, x, v, vv
    phi: x, xx, tx (micro-macro), x, xx (others)
"""
from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..quadrature import flux_moment, moment
from .operators import column, fokker_planck_L, maxwellian_jet

FIELD_LAWS = ("poisson", "gravity")


def field_residual(phi_jet, rho, background, field_law="poisson"):
    """poisson: -phi_xx - (rho - h); gravity: phi_x - (rho - h)."""
    if field_law == "poisson":
        return -phi_jet.d_xx - (rho - background)
    if field_law == "gravity":
        return phi_jet.d_x - (rho - background)
    raise ContractError(f"unknown field law {field_law!r}; expected one of {FIELD_LAWS}")


def _node_scale(eps):
    eps = np.asarray(eps, dtype=float)
    return eps if eps.ndim == 0 else eps[:, None]


def residual_vanilla(f_jet, phi_jet, rule, eps, background, field_law="poisson"):
    """(eps f_t + eps v f_x - L f, field residual with rho = <f>)."""
    v = rule.nodes
    e = _node_scale(eps)
    lf = fokker_planck_L(f_jet, v, phi_jet.d_x)
    vlasov = e * f_jet.d_t + (e * v) * f_jet.d_x - lf
    rho = moment(rule, f_jet.value)
    return vlasov, field_residual(phi_jet, rho, background, field_law)


def residual_micro_macro(rho_jet, g_jet, phi_jet, rule, eps, background, field_law="poisson"):
    """(macro, micro, field) residuals of the micro-macro system, f = rho M + eps g."""
    v = rule.nodes
    e = _node_scale(eps)
    m = maxwellian_jet(phi_jet, v)
    rho = column(rho_jet.value)
    rho_m_x = column(rho_jet.d_x) * m.value + rho * m.d_x
    flux_rho_m_x = flux_moment(rule, rho_m_x)
    flux_g_x = flux_moment(rule, g_jet.d_x)
    macro = rho_jet.d_t + flux_rho_m_x + np.asarray(eps, dtype=float) * flux_g_x
    lg = fokker_planck_L(g_jet, v, phi_jet.d_x)
    source = v * rho_m_x - column(flux_rho_m_x) * m.value
    micro = (e * g_jet.d_t + e * (v * g_jet.d_x - column(flux_g_x) * m.value)
             - (lg - source - rho * m.d_t))
    return macro, micro, field_residual(phi_jet, rho_jet.value, background, field_law)


def residual_mass_conservation(rho_jet, f_jet, phi_jet, rule, eps, background, field_law="poisson"):
    """(macro, kinetic, field, conservation) residuals of the mass-conservation system."""
    v = rule.nodes
    e = _node_scale(eps)
    macro = rho_jet.d_t + flux_moment(rule, f_jet.d_x)
    lf = fokker_planck_L(f_jet, v, phi_jet.d_x)
    kinetic = e * f_jet.d_t + (e * v) * f_jet.d_x - lf
    field = field_residual(phi_jet, rho_jet.value, background, field_law)
    conservation = moment(rule, f_jet.value) - rho_jet.value
    return macro, kinetic, field, conservation
