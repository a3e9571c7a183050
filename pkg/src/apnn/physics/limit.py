"""The eps = 0 systems written out directly in numpy.

Deliberately independent of ``residuals.py`` (no shared helpers beyond the
quadrature rule) so the two can be cross-checked.  The sign of rho d_t M
follows from inserting f = rho M + eps g into the scaled kinetic equation
and applying I - Pi; it is the eps -> 0 limit of the micro equation.

    micro-macro limit:  L g = [v d_x(rho M) - d_x<v rho M> M] + rho d_t M
                        d_t rho + d_x <v rho M> = 0
    mass-conservation:  L f = 0,  d_t rho + d_x <v f> = 0,  <f> = rho
    both:               field equation for phi
"""
from __future__ import annotations

import numpy as np


def _a(jet, name):
    part = jet.value if name == "value" else getattr(jet, "d_" + name)
    return np.asarray(part.data if hasattr(part, "data") else part, dtype=float)


def _field(phi, rho, h, field_law):
    if field_law == "gravity":
        return _a(phi, "x") - rho + h
    return -_a(phi, "xx") - rho + h


def limit_residual_micro_macro(rho_jet, g_jet, phi_jet, rule, background, field_law="poisson"):
    v, wq = rule.nodes, rule.weights
    px = _a(phi_jet, "x")[:, None]
    pxx = _a(phi_jet, "xx")[:, None]
    ptx = _a(phi_jet, "tx")[:, None]
    shift = v[None, :] + px
    gauss = np.exp(-0.5 * shift**2) / np.sqrt(2.0 * np.pi)
    gauss_x = -shift * gauss * pxx
    gauss_t = -shift * gauss * ptx
    rho = _a(rho_jet, "value")
    drho = np.einsum("b,bi->bi", _a(rho_jet, "x"), gauss) + np.einsum("b,bi->bi", rho, gauss_x)
    j = np.einsum("bi,i->b", drho, wq * v)
    g, gv, gvv = _a(g_jet, "value"), _a(g_jet, "v"), _a(g_jet, "vv")
    lg = g + shift * gv + gvv
    micro = v[None, :] * drho - j[:, None] * gauss + rho[:, None] * gauss_t - lg
    macro = _a(rho_jet, "t") + j
    return macro, micro, _field(phi_jet, rho, background, field_law)


def limit_residual_mass_conservation(rho_jet, f_jet, phi_jet, rule, background, field_law="poisson"):
    v, wq = rule.nodes, rule.weights
    shift = v[None, :] + _a(phi_jet, "x")[:, None]
    f = _a(f_jet, "value")
    kinetic = -(f + shift * _a(f_jet, "v") + _a(f_jet, "vv"))
    macro = _a(rho_jet, "t") + np.einsum("bi,i->b", _a(f_jet, "x"), wq * v)
    rho = _a(rho_jet, "value")
    conservation = np.einsum("bi,i->b", f, wq) - rho
    return macro, kinetic, _field(phi_jet, rho, background, field_law), conservation
