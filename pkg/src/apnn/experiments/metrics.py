from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError


def _pair(pred, ref):
    pred = np.asarray(pred, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if pred.shape != ref.shape:
        raise ShapeError(f"prediction has {pred.size} points, reference {ref.size}")
    return pred, ref


def rel_l2(pred, ref):
    """sqrt(sum |pred - ref|^2 / sum |ref|^2)."""
    pred, ref = _pair(pred, ref)
    den = np.sum(ref * ref)
    if den == 0:
        raise ZeroDivisionError("relative error against an all-zero reference")
    return float(np.sqrt(np.sum((pred - ref) ** 2) / den))


def rmse(pred, ref):
    pred, ref = _pair(pred, ref)
    return float(np.sqrt(np.mean((pred - ref) ** 2)))


@dataclass
class Metrics:
    """Per-time errors keyed by (quantity, time) plus the energy trajectory."""

    rel_l2: dict = field(default_factory=dict)
    rmse: dict = field(default_factory=dict)
    energy_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    energy: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def rows(self, problem, method, epsilon):
        out = []
        for metric, table in (("rel_l2", self.rel_l2), ("rmse", self.rmse)):
            for (quantity, t), value in sorted(table.items()):
                out.append({"problem": problem, "method": method, "epsilon": epsilon, "metric": metric,
                            "quantity": quantity, "time": t, "value": value})
        for t, e in zip(self.energy_t, self.energy):
            out.append({"problem": problem, "method": method, "epsilon": epsilon, "metric": "energy",
                        "quantity": "E", "time": float(t), "value": float(e)})
        return out
