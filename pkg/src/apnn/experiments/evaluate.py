"""Evaluate trained networks on a reference mesh and write the results table."""
from __future__ import annotations

import csv
import os

import numpy as np

from ..autodiff.tape import Var
from ..errors import MissingInputError
from ..model import eval_jet, eval_value
from ..reference import electric_energy
from .metrics import Metrics, rel_l2, rmse

CSV_COLUMNS = ("problem", "method", "epsilon", "metric", "quantity", "time", "value")
QUANTITIES = ("rho", "E", "flux")


def _np(a):
    return a.data if isinstance(a, Var) else np.asarray(a)


def _fields_once(netset, problem, rule, t, x, z):
    """rho, E, flux and min(f) at the points (t, x[, z]) for one parameter draw."""
    nets, inputs, method = netset.nets, netset.inputs, netset.method
    phi_x = _np(eval_jet(nets["phi"], inputs, t, x, z, which=("x",)).d_x)
    w = rule.weights
    v = rule.nodes
    if method == "mm":
        rho = eval_value(nets["rho"], inputs, t, x, z)
        g = eval_value(nets["g"], inputs, t, x, z, v=v, rule=rule)
        eps = problem.eps(x)[:, None]
        m = np.exp(-0.5 * (v[None, :] + phi_x[:, None]) ** 2) / np.sqrt(2 * np.pi)
        f = rho[:, None] * m + eps * g
    else:
        f = eval_value(nets["f"], inputs, t, x, z, v=v, rule=rule)
        rho = eval_value(nets["rho"], inputs, t, x, z) if method == "mc" else f @ w
    flux = f @ (w * v)
    return {"rho": rho, "E": -phi_x, "flux": flux, "f_min": f.min(axis=1)}


def predict_fields(netset, problem, rule, t, x, n_draws=10_000, seed=0, chunk=None):
    """Network predictions at times/points (t, x); expectations over z for the UQ problem.

    Returns a dict with ``rho``, ``E``, ``flux`` (means) and ``f_min``.  For UQ
    runs the dict also carries ``*_sem``, the Monte-Carlo standard error.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if not problem.n_uq:
        return _fields_once(netset, problem, rule, t, x, None)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    if chunk is None:
        # keep the kinetic evaluation near 2e6 rows per pass
        chunk = max(1, 2_000_000 // (x.size * len(rule.nodes)))
    total = {q: np.zeros_like(x) for q in QUANTITIES}
    total2 = {q: np.zeros_like(x) for q in QUANTITIES}
    f_min = np.full_like(x, np.inf)
    done = 0
    while done < n_draws:
        m = min(chunk, n_draws - done)
        zs = rng.uniform(-1.0, 1.0, size=(m, problem.n_uq))
        # every draw is evaluated at every mesh point in one batch
        zz = np.repeat(zs, x.size, axis=0)
        out = _fields_once(netset, problem, rule, np.tile(t, m), np.tile(x, m), zz)
        for q in QUANTITIES:
            vals = out[q].reshape(m, x.size)
            total[q] += vals.sum(axis=0)
            total2[q] += (vals * vals).sum(axis=0)
        f_min = np.minimum(f_min, out["f_min"].reshape(m, x.size).min(axis=0))
        done += m
    res = {"f_min": f_min}
    for q in QUANTITIES:
        mean = total[q] / n_draws
        var = np.maximum(total2[q] / n_draws - mean * mean, 0.0)
        res[q] = mean
        res[q + "_sem"] = np.sqrt(var / max(n_draws - 1, 1))
    return res


def evaluate(netset, problem, rule, reference, times=None, energy_times=None, n_draws=10_000, seed=0):
    """Relative l2 and RMSE of rho, E, flux on the reference mesh at ``times``.

    The energy trajectory is the network's electric energy at ``energy_times``
    (default: the reference's save times).  Returns (Metrics, predictions)
    where predictions maps time to the predicted fields.
    """
    times = problem.eval_times if times is None else times
    metrics = Metrics()
    preds = {}
    x = reference.x
    for t in times:
        k = reference.index(t)
        p = predict_fields(netset, problem, rule, np.full_like(x, t), x, n_draws, seed)
        preds[float(t)] = p
        for q in QUANTITIES:
            ref = getattr(reference, q)[k]
            metrics.rmse[(q, float(t))] = rmse(p[q], ref)
            # relative error is undefined against a numerically zero field (e.g. flux at t = 0)
            if np.max(np.abs(ref)) > 1e-10:
                metrics.rel_l2[(q, float(t))] = rel_l2(p[q], ref)
    energy_times = reference.times if energy_times is None else np.asarray(energy_times, dtype=float)
    energy = []
    for t in energy_times:
        p = predict_fields(netset, problem, rule, np.full_like(x, t), x, min(n_draws, 1000), seed)
        energy.append(electric_energy(p["E"], reference.dx))
    metrics.energy_t = np.asarray(energy_times, dtype=float)
    metrics.energy = np.asarray(energy, dtype=float)
    return metrics, preds


def write_results(path, rows):
    """Append-safe CSV writer; the header is written when the file is new."""
    new = not os.path.exists(path)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if new:
            w.writeheader()
        for r in rows:
            w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in CSV_COLUMNS})


def read_results(path):
    if not os.path.exists(path):
        raise MissingInputError(f"results file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["epsilon"] = float(r["epsilon"])
        r["time"] = float(r["time"])
        r["value"] = float(r["value"])
    return rows
