"""Network sets for the three formulations and the coordinate-to-input map.

Inputs are laid out as [t, features(x), v?, z?]; with Fourier features on
x the networks are exactly periodic in x.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff.mlp import InputJet, Mlp, TrackedMlp, forward, forward_jet, xavier_init
from .errors import ConfigError, ShapeError

METHODS = ("mm", "mc", "pinn")

# name -> (head, depends on v)
NET_ROLES = {
    "mm": {"rho": ("softplus", False), "g": ("zero_mean_v", True), "phi": ("identity", False)},
    "mc": {"rho": ("softplus", False), "f": ("softplus", True), "phi": ("identity", False)},
    "pinn": {"f": ("softplus", True), "phi": ("identity", False)},
}


def check_method(method):
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
    return method


@dataclass(frozen=True)
class InputMap:
    features: object = None  # FourierFeatures or None for raw x
    n_uq: int = 0

    def width(self, kinetic):
        nx = self.features.size if self.features is not None else 1
        return 1 + nx + int(kinetic) + self.n_uq

    def jet(self, t, x, z=None, v=None):
        """InputJet for points (t, x[, z]), broadcast over velocity nodes ``v`` if given."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if t.shape != x.shape or t.ndim != 1:
            raise ShapeError(f"t and x must be matching 1-d arrays, got {t.shape} and {x.shape}")
        b = t.shape[0]
        if self.features is not None:
            fv, f1, f2 = self.features.jet(x)
        else:
            fv, f1, f2 = x[:, None], np.ones((b, 1)), np.zeros((b, 1))
        nx = fv.shape[1]
        cols = [t[:, None], fv]
        if v is not None:
            cols.append(np.zeros((b, 1)))
        if self.n_uq:
            z = np.asarray(z, dtype=float)
            if z.shape != (b, self.n_uq):
                raise ShapeError(f"expected z of shape {(b, self.n_uq)}, got {z.shape}")
            cols.append(z)
        value = np.concatenate(cols, axis=1)
        seed_t = np.zeros_like(value)
        seed_t[:, 0] = 1.0
        seed_x = np.zeros_like(value)
        seed_x[:, 1:1 + nx] = f1
        seed_xx = np.zeros_like(value)
        seed_xx[:, 1:1 + nx] = f2
        seeds = {"t": seed_t, "x": seed_x, "xx": seed_xx}
        directions = ("t", "x")
        if v is not None:
            v = np.asarray(v, dtype=float)
            n = v.shape[0]
            vcol = 1 + nx
            value = np.repeat(value[:, None, :], n, axis=1)
            value[:, :, vcol] = v
            seeds = {k: np.repeat(s[:, None, :], n, axis=1) for k, s in seeds.items()}
            seed_v = np.zeros_like(value)
            seed_v[:, :, vcol] = 1.0
            seeds["v"] = seed_v
            directions = ("t", "x", "v")
        return InputJet(value, seeds, directions)


@dataclass
class NetworkSet:
    method: str
    nets: dict
    inputs: InputMap

    @property
    def names(self):
        return tuple(self.nets)

    def kinetic(self, name):
        return NET_ROLES[self.method][name][1]

    def copy(self):
        return NetworkSet(self.method, {k: n.copy() for k, n in self.nets.items()}, self.inputs)


def build_networks(method, inputs, hidden=(128, 128, 128, 128, 128), kinetic_hidden=None,
                   seed=0, dtype=np.float64):
    """Xavier-initialised networks for ``method``; each network gets an independent seed."""
    check_method(method)
    kinetic_hidden = tuple(kinetic_hidden or hidden)
    roles = NET_ROLES[method]
    seeds = np.random.SeedSequence(int(seed)).generate_state(len(roles), dtype=np.uint64)
    nets = {}
    for (name, (head, kinetic)), s in zip(roles.items(), seeds):
        widths = [inputs.width(kinetic), *(kinetic_hidden if kinetic else hidden), 1]
        nets[name] = xavier_init(widths, int(s), head=head, dtype=dtype)
    return NetworkSet(method, nets, inputs)


def eval_jet(net, inputs, t, x, z=None, v=None, which=("value",), rule=None):
    """Jet of one network (Mlp or TrackedMlp) at points (t, x[, z]) and nodes v."""
    mlp = net.net if isinstance(net, TrackedMlp) else net
    if v is None and rule is not None and mlp.head == "zero_mean_v":
        v = rule.nodes
    jet = inputs.jet(t, x, z, v)
    if jet.value.dtype != mlp.weights[0].dtype:
        jet = InputJet(jet.value.astype(mlp.weights[0].dtype),
                       {k: s.astype(mlp.weights[0].dtype) for k, s in jet.seeds.items()}, jet.directions)
    return forward_jet(net, jet, which=which, quad=rule)


def eval_value(net, inputs, t, x, z=None, v=None, rule=None):
    """Plain value of one network, no tape."""
    jet = inputs.jet(t, x, z, v)
    return forward(net, jet.value.astype(net.weights[0].dtype), quad=rule)
