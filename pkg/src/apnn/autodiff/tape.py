"""Minimal reverse-mode tape over numpy arrays.

Only what the residual and loss algebra needs: broadcasting arithmetic,
``exp``, reductions, reshaping and indexing.  Heavy lifting (the network
layers) is done by fused nodes built with :func:`custom_op`.
"""
from __future__ import annotations

import numpy as np


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    ndiff = grad.ndim - len(shape)
    if ndiff > 0:
        grad = grad.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Var:
    """A node on the tape: an array value plus links to the nodes it came from.

    ``parents`` is a tuple of ``(Var, vjp)`` pairs where ``vjp`` maps the
    cotangent of this node onto the cotangent of that parent.
    """

    __slots__ = ("data", "parents")
    __array_priority__ = 100
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, data, parents=()):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data, dtype=float)
        self.parents = parents

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Var(shape={self.data.shape}, tracked={bool(self.parents)})"

    def numpy(self):
        return self.data

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        if isinstance(other, Var):
            raise TypeError("division by a tracked value is not supported")
        return mul(self, 1.0 / np.asarray(other, dtype=self.data.dtype))

    def __pow__(self, power):
        if power != 2:
            raise ValueError("only squaring is supported")
        return square(self)

    def __getitem__(self, index):
        return take(self, index)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None):
        return mean(self, axis=axis)

    def reshape(self, *shape):
        return reshape(self, *shape)


def as_var(x):
    return x if isinstance(x, Var) else Var(np.asarray(x, dtype=float))


def custom_op(value, parents_and_vjps):
    """Record a node whose backward rules are supplied by the caller.

    Parents that are plain arrays (constants) are dropped.
    """
    links = tuple((p, f) for p, f in parents_and_vjps if isinstance(p, Var))
    return Var(value, links)


def add(a, b):
    a, b = as_var(a), as_var(b)
    out = a.data + b.data
    return custom_op(out, (
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(g, b.data.shape)),
    ))


def neg(a):
    a = as_var(a)
    return custom_op(-a.data, ((a, lambda g: -g),))


def mul(a, b):
    a, b = as_var(a), as_var(b)
    out = a.data * b.data
    return custom_op(out, (
        (a, lambda g: _unbroadcast(g * b.data, a.data.shape)),
        (b, lambda g: _unbroadcast(g * a.data, b.data.shape)),
    ))


def square(a):
    a = as_var(a)
    return custom_op(a.data * a.data, ((a, lambda g: 2.0 * g * a.data),))


def exp(a):
    a = as_var(a)
    out = np.exp(a.data)
    return custom_op(out, ((a, lambda g: g * out),))


def sum_(a, axis=None, keepdims=False):
    a = as_var(a)
    out = np.sum(a.data, axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, a.data.shape)

    return custom_op(np.asarray(out), ((a, vjp),))


def mean(a, axis=None):
    a = as_var(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return sum_(a, axis=axis) * (1.0 / n)


def reshape(a, *shape):
    a = as_var(a)
    if len(shape) == 1 and isinstance(shape[0], tuple):
        shape = shape[0]
    return custom_op(a.data.reshape(shape), ((a, lambda g: g.reshape(a.data.shape)),))


def take(a, index):
    a = as_var(a)

    basic = isinstance(index, (int, slice)) or (
        isinstance(index, tuple) and all(isinstance(i, (int, slice)) or i is None or i is Ellipsis for i in index))

    def vjp(g):
        out = np.zeros_like(a.data)
        if basic:
            out[index] = g
        else:
            np.add.at(out, index, g)
        return out

    return custom_op(a.data[index], ((a, vjp),))


def cast(a, dtype):
    a = as_var(a)
    src = a.data.dtype
    return custom_op(a.data.astype(dtype), ((a, lambda g: g.astype(src)),))


def stack(items, axis=0):
    items = [as_var(x) for x in items]
    out = np.stack([x.data for x in items], axis=axis)
    links = []
    for i, x in enumerate(items):
        links.append((x, lambda g, i=i: np.take(g, i, axis=axis)))
    return custom_op(out, links)


def backward(root, wrt):
    """Cotangents of scalar ``root`` with respect to each Var in ``wrt``.

    Traversal order is fixed by the recording order, so repeated calls on
    identical computations accumulate in the same order (bitwise
    reproducible).
    """
    root = as_var(root)
    if root.data.size != 1:
        raise ValueError("backward needs a scalar root")
    order = []
    seen = set()
    stack_ = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack_.append((parent, False))
    grads = {id(root): np.ones_like(root.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None) if node.parents else grads.get(id(node))
        if g is None or not node.parents:
            continue
        for parent, vjp in node.parents:
            contrib = vjp(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + contrib
            else:
                # contributions are never mutated in place, so views are safe to keep
                grads[key] = np.asarray(contrib, dtype=parent.data.dtype)
    return [grads.get(id(w), np.zeros_like(w.data)) for w in wrt]
