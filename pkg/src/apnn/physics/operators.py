"""Maxwellian jets, the field-dependent Fokker-Planck operator and the electric field.

Jets of x-dependent quantities have shape (B,); velocity-dependent ones are
(B, n) with the last axis on the quadrature nodes.  Components may be tape
nodes or plain arrays.
"""
from __future__ import annotations

import numpy as np

from ..autodiff import tape
from ..autodiff.mlp import Jet
from ..errors import ContractError
from .fields import INV_SQRT_2PI


def column(a):
    """(B,) -> (B, 1) so it broadcasts against node-last arrays."""
    if isinstance(a, tape.Var):
        return a.reshape(a.shape + (1,))
    return np.asarray(a)[..., None]


def _need(jet, names, who):
    for name in names:
        if getattr(jet, "value" if name == "value" else "d_" + name, None) is None:
            raise ContractError(f"{who} needs d_{name} on its input jet")


def maxwellian_jet(phi_jet, v):
    """M(t, x, v) = exp(-w^2/2)/sqrt(2 pi), w = v + phi_x, with d_t, d_x, d_v by the chain rule.

    d_t and d_x are produced only when phi_jet carries d_tx and d_xx.
    """
    _need(phi_jet, ("x",), "maxwellian_jet")
    v = np.asarray(v, dtype=float)
    w = column(phi_jet.d_x) + v
    m = tape.exp(tape.square(w) * -0.5) * INV_SQRT_2PI
    wm = w * m
    d_x = -wm * column(phi_jet.d_xx) if phi_jet.d_xx is not None else None
    d_t = -wm * column(phi_jet.d_tx) if phi_jet.d_tx is not None else None
    return Jet.from_parts(m, t=d_t, x=d_x, v=-wm)


def fokker_planck_L(f_jet, v, dphi_dx):
    """d_v[(v + phi_x) f + d_v f] = f + (v + phi_x) f_v + f_vv.

    ``dphi_dx`` is per point (B,) or a scalar; ``v`` is the node vector.
    """
    _need(f_jet, ("v", "vv"), "fokker_planck_L")
    v = np.asarray(v, dtype=float)
    if np.ndim(dphi_dx) == 0 and not isinstance(dphi_dx, tape.Var):
        w = v + float(dphi_dx)
    else:
        w = column(dphi_dx) + v
    return f_jet.value + w * f_jet.d_v + f_jet.d_vv


def electric_field(phi_jet):
    """E = -d_x phi."""
    _need(phi_jet, ("x",), "electric_field")
    return -phi_jet.d_x
