"""Fully-connected tanh networks with exact input jets and parameter gradients.

Input derivatives up to second order are pushed forward through the layer
recursion as a stacked array of components ``(C, N, width)``; component 0 is
the value, the rest are the requested derivatives.  Each affine layer and
each activation is one fused tape node, so the reverse sweep that produces
parameter gradients only stores one stacked array per layer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ContractError, NumericOverflowError, ShapeError
from . import tape
from .tape import Var

FIRST_ORDER = ("t", "x", "v")
SECOND_ORDER = {"xx": ("x", "x"), "vv": ("v", "v"), "tx": ("t", "x")}
COMPONENTS = ("value",) + FIRST_ORDER + tuple(SECOND_ORDER)
HEADS = ("identity", "softplus", "zero_mean_v")


def resolve_components(which):
    """Expand a derivative mask to the ordered component tuple it needs."""
    which = set(which)
    unknown = which - set(COMPONENTS)
    if unknown:
        raise ContractError(f"unknown derivative components {sorted(unknown)}")
    needed = set(which) - {"value"}
    for name in list(needed):
        if name in SECOND_ORDER:
            needed.update(SECOND_ORDER[name])
    return ("value",) + tuple(c for c in COMPONENTS[1:] if c in needed)


@dataclass
class Mlp:
    widths: list
    weights: list
    biases: list
    head: str = "identity"

    def __post_init__(self):
        validate_widths(self.widths)
        if self.head not in HEADS:
            raise ConfigError(f"unknown head {self.head!r}; expected one of {HEADS}")
        if len(self.weights) != len(self.widths) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("layer count does not match widths")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.widths[i + 1], self.widths[i]) or b.shape != (self.widths[i + 1],):
                raise ShapeError(f"layer {i} has shapes {w.shape}, {b.shape}")

    @property
    def n_inputs(self):
        return self.widths[0]

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def n_parameters(self):
        return sum(p.size for p in self.parameters())

    def copy(self):
        return Mlp(list(self.widths), [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.head)

    def bind(self):
        """Tracked view: parameters become tape leaves."""
        return TrackedMlp(self, [Var(w) for w in self.weights], [Var(b) for b in self.biases])


@dataclass
class TrackedMlp:
    net: Mlp
    weights: list
    biases: list

    @property
    def widths(self):
        return self.net.widths

    @property
    def head(self):
        return self.net.head

    def leaves(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


@dataclass
class ParamGrad:
    """Gradient of a scalar loss with respect to one network's parameters."""

    weights: list
    biases: list

    def arrays(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def scaled(self, c):
        return ParamGrad([c * w for w in self.weights], [c * b for b in self.biases])


def validate_widths(widths):
    if len(widths) < 3:
        raise ConfigError(f"widths needs at least 3 entries, got {list(widths)}")
    if any(int(w) != w or w <= 0 for w in widths):
        raise ConfigError(f"widths must be positive integers, got {list(widths)}")


def xavier_init(widths, seed, head="identity", dtype=np.float64):
    """Glorot-uniform weights, zero biases, reproducible from ``seed``."""
    validate_widths(widths)
    widths = [int(w) for w in widths]
    rng = np.random.default_rng(int(seed) % 2**64)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return Mlp(widths, weights, biases, head)


# -- scalar activation families: value and three derivatives ----------------

def softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _tanh_derivs(z, order):
    s = np.tanh(z)
    d1 = 1.0 - s * s
    out = [s, d1]
    if order >= 2:
        out.append(-2.0 * s * d1)
    if order >= 3:
        out.append(d1 * (6.0 * s * s - 2.0))
    return out


def _softplus_derivs(z, order):
    sig = _sigmoid(z)
    out = [softplus(z), sig]
    if order >= 2:
        out.append(sig * (1.0 - sig))
    if order >= 3:
        out.append(sig * (1.0 - sig) * (1.0 - 2.0 * sig))
    return out


_ACTIVATIONS = {"tanh": _tanh_derivs, "softplus": _softplus_derivs}


def _second_pairs(comps):
    index = {c: i for i, c in enumerate(comps)}
    return [(index[c], index[a], index[b]) for c in comps if c in SECOND_ORDER
            for a, b in [SECOND_ORDER[c]]]


def _first_slice(comps):
    # first-order components sit directly after the value in COMPONENTS order
    k = sum(1 for c in comps if c in FIRST_ORDER)
    return slice(1, 1 + k)


def elementwise_jet(z, comps, kind):
    """Push a stacked jet through a scalar nonlinearity (one tape node)."""
    zdata = z.data if isinstance(z, Var) else z
    pairs = _second_pairs(comps)
    fo = _first_slice(comps)
    derivs = _ACTIVATIONS[kind](zdata[0], 2 if pairs else 1)
    d1 = derivs[1]
    h = np.empty_like(zdata)
    h[0] = derivs[0]
    h[fo] = d1 * zdata[fo]
    for c, a, b in pairs:
        h[c] = derivs[2] * zdata[a] * zdata[b] + d1 * zdata[c]

    def vjp(g):
        gz = g * d1
        if fo.stop > 1:
            d2 = derivs[2] if pairs else _ACTIVATIONS[kind](zdata[0], 2)[2]
            gz[0] += d2 * np.einsum("c...,c...->...", g[fo], zdata[fo])
        if pairs:
            d2 = derivs[2]
            d3 = _ACTIVATIONS[kind](zdata[0], 3)[3]
            for c, a, b in pairs:
                gc = g[c]
                gz[0] += gc * (d3 * zdata[a] * zdata[b] + d2 * zdata[c])
                gd2 = gc * d2
                gz[a] += gd2 * zdata[b]
                gz[b] += gd2 * zdata[a]
        return gz

    return tape.custom_op(h, ((z, vjp),))


def affine_jet(x, w, b):
    """Stacked ``x @ w.T`` with the bias added to the value component only."""
    xd = x.data if isinstance(x, Var) else x
    wd = w.data if isinstance(w, Var) else w
    bd = b.data if isinstance(b, Var) else b
    c, n, din = xd.shape
    x2 = xd.reshape(c * n, din)
    z = (x2 @ wd.T).reshape(c, n, wd.shape[0])
    z[0] += bd

    def vjp_x(g):
        return (g.reshape(c * n, -1) @ wd).reshape(c, n, din)

    def vjp_w(g):
        return g.reshape(c * n, -1).T @ x2

    def vjp_b(g):
        return g[0].sum(axis=0)

    return tape.custom_op(z, ((x, vjp_x), (w, vjp_w), (b, vjp_b)))


def zero_mean_v_jet(y, comps, weights, omega_length):
    """Subtract the velocity average: y(.., v) - (1/|Omega|) sum_i w_i y(.., v_i).

    ``y`` has shape ``(C, B, n)`` with the last axis on the quadrature nodes.
    The average does not depend on v, so v-derivative components are left
    unchanged.
    """
    yd = y.data
    scale = weights / omega_length
    keep = np.array([c not in ("v", "vv") for c in comps])
    avg = (yd * scale).sum(axis=-1, keepdims=True)
    out = yd - avg * keep[:, None, None]

    def vjp(g):
        gs = g.sum(axis=-1, keepdims=True) * keep[:, None, None]
        return g - gs * scale

    return tape.custom_op(out, ((y, vjp),))


@dataclass
class InputJet:
    """Network input together with its derivatives along named directions.

    ``value`` has shape ``(..., d_in)``; ``seeds`` maps a component name to an
    array of the same shape holding d(input)/d(direction) for first-order
    names and the second derivative for second-order names.  Missing seeds
    are zero.  ``directions`` lists which coordinates the input depends on.
    """

    value: np.ndarray
    seeds: dict = field(default_factory=dict)
    directions: tuple = ()

    @classmethod
    def from_coordinates(cls, coords, layout):
        """Raw coordinate input; ``layout`` maps 't'/'x'/'v' to column index."""
        coords = np.asarray(coords, dtype=float)
        seeds = {}
        for name, col in layout.items():
            if name not in FIRST_ORDER:
                continue
            s = np.zeros_like(coords)
            s[..., col] = 1.0
            seeds[name] = s
        return cls(coords, seeds, tuple(k for k in layout if k in FIRST_ORDER))

    def stacked(self, comps):
        for c in comps[1:]:
            dirs = SECOND_ORDER.get(c, (c,))
            for d in dirs:
                if d not in self.directions:
                    raise ContractError(f"derivative d_{c} requested but the input has no {d!r} coordinate")
        out = np.zeros((len(comps),) + self.value.shape, dtype=self.value.dtype)
        out[0] = self.value
        for i, c in enumerate(comps[1:], 1):
            if c in self.seeds:
                out[i] = self.seeds[c]
        return out


class Jet:
    """Network output plus its input-derivatives.

    Attributes ``value, d_t, d_x, d_v, d_xx, d_vv, d_tx`` are tape nodes
    (``Var``) or ``None`` when not requested.  A direction the input does not
    depend on yields exact zeros.
    """

    def __init__(self, components, stacked):
        self.components = components
        self.stacked = stacked
        for name in COMPONENTS:
            attr = "value" if name == "value" else "d_" + name
            setattr(self, attr, stacked[components.index(name)] if name in components else None)

    @classmethod
    def from_parts(cls, value, **derivs):
        """Build a jet from explicit components (arrays or tape nodes); None entries are skipped."""
        comps = ["value"] + [c for c in COMPONENTS[1:] if derivs.get(c) is not None]
        unknown = set(derivs) - set(COMPONENTS)
        if unknown:
            raise ContractError(f"unknown derivative components {sorted(unknown)}")
        parts = [tape.as_var(value)] + [tape.as_var(derivs[c]) for c in comps[1:]]
        return cls(tuple(comps), parts)

    def __getitem__(self, name):
        attr = "value" if name == "value" else "d_" + name
        out = getattr(self, attr)
        if out is None:
            raise ContractError(f"component {name!r} was not requested")
        return out

    def numpy(self, name="value"):
        return self[name].data


def _prepare_input(net, inputs, layout):
    if not isinstance(inputs, InputJet):
        if layout is None:
            raise ContractError("raw inputs need a coordinate layout")
        inputs = InputJet.from_coordinates(inputs, layout)
    if inputs.value.shape[-1] != net.widths[0]:
        raise ShapeError(f"input width {inputs.value.shape[-1]} != widths[0]={net.widths[0]}")
    return inputs


def forward_jet(net, inputs, which=("value",), layout=None, quad=None):
    """Evaluate the network and the requested exact input-derivatives.

    ``net`` is an :class:`Mlp` (parameters treated as constants) or a
    :class:`TrackedMlp` (gradients flow to its parameters).  ``quad`` is the
    velocity quadrature rule, required by the ``zero_mean_v`` head, in which
    case ``inputs`` must have shape ``(B, n, d_in)`` with axis 1 on the nodes.
    """
    tracked = net if isinstance(net, TrackedMlp) else None
    mlp = tracked.net if tracked else net
    inputs = _prepare_input(mlp, inputs, layout)
    comps = resolve_components(which)
    batch_shape = inputs.value.shape[:-1]
    x0 = inputs.stacked(comps).reshape(len(comps), -1, mlp.widths[0])
    weights = tracked.weights if tracked else mlp.weights
    biases = tracked.biases if tracked else mlp.biases
    h = x0
    nlayers = len(weights)
    for i in range(nlayers):
        z = affine_jet(h, weights[i], biases[i])
        if i < nlayers - 1:
            h = elementwise_jet(z, comps, "tanh")
        else:
            h = z
    if mlp.head == "softplus":
        h = elementwise_jet(h, comps, "softplus")
    y = tape.reshape(h, (len(comps),) + batch_shape)
    if y.data.dtype != np.float64:
        # downstream residual algebra runs in float64; the network keeps its own precision
        y = tape.cast(y, np.float64)
    if mlp.head == "zero_mean_v":
        if quad is None or len(batch_shape) != 2 or batch_shape[1] != len(quad.weights):
            raise ContractError("zero_mean_v head needs a quadrature rule and (B, n, d) inputs")
        y = zero_mean_v_jet(y, comps, quad.weights, quad.length)
    comp_vars = [y[i] for i in range(len(comps))]
    return Jet(comps, comp_vars)


def forward(net, inputs, quad=None):
    """Plain evaluation (no derivatives, no tape)."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.shape[-1] != net.widths[0]:
        raise ShapeError(f"input width {inputs.shape[-1]} != widths[0]={net.widths[0]}")
    h = inputs
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i < len(net.weights) - 1:
            h = np.tanh(h)
    h = h[..., 0]
    if net.head == "softplus":
        h = softplus(h)
    elif net.head == "zero_mean_v":
        if quad is None or h.ndim < 1 or h.shape[-1] != len(quad.weights):
            raise ContractError("zero_mean_v head needs a quadrature rule and node-last inputs")
        h = h - (h * quad.weights).sum(axis=-1, keepdims=True) / quad.length
    return h


@dataclass
class LossGradient:
    total: float
    terms: dict
    grads: list


def loss_gradient(nets, evaluator):
    """Exact gradient of a scalar loss with respect to every network parameter.

    ``evaluator`` receives the tracked networks (same order as ``nets``) and
    returns either a scalar ``Var`` or a mapping ``term name -> scalar Var``
    whose sum is the loss.
    """
    tracked = [n.bind() for n in nets]
    out = evaluator(*tracked)
    terms = out if isinstance(out, dict) else {"loss": out}
    total = None
    for name, term in terms.items():
        val = float(np.asarray(term.data if isinstance(term, Var) else term))
        if not np.isfinite(val):
            raise NumericOverflowError(f"loss term {name!r} is not finite ({val})", term=name)
        total = term if total is None else total + term
    leaves = [leaf for t in tracked for leaf in t.leaves()]
    flat = tape.backward(total, leaves)
    grads, k = [], 0
    for t in tracked:
        n = len(t.weights)
        ws = [flat[k + 2 * i] for i in range(n)]
        bs = [flat[k + 2 * i + 1] for i in range(n)]
        k += 2 * n
        for arr in ws + bs:
            if not np.all(np.isfinite(arr)):
                raise NumericOverflowError("non-finite parameter gradient")
        grads.append(ParamGrad(ws, bs))
    term_values = {name: float(np.asarray(term.data)) for name, term in terms.items()}
    return LossGradient(float(total.data), term_values, grads)
