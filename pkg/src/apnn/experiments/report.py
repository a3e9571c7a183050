"""SVG line charts: profiles against the reference and the electric-energy history."""
from __future__ import annotations

import os

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_profiles(path, x, reference, preds, quantity, label="network"):
    """One panel per time: predicted and reference ``quantity`` against x."""
    plt = _pyplot()
    times = sorted(preds)
    fig, axes = plt.subplots(1, len(times), figsize=(4 * len(times), 3.2), squeeze=False)
    for ax, t in zip(axes[0], times):
        ax.plot(x, getattr(reference, quantity)[reference.index(t)], "k-", lw=1.2, label="reference")
        ax.plot(x, preds[t][quantity], "r--", lw=1.2, label=label)
        ax.set_title(f"{quantity}, t = {t:g}")
        ax.set_xlabel("x")
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_energy(path, reference, metrics, label="network"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(reference.energy_t, np.maximum(reference.energy, 1e-300), "k-", lw=1.2, label="reference")
    if metrics.energy_t.size:
        ax.semilogy(metrics.energy_t, np.maximum(metrics.energy, 1e-300), "ro--", ms=3, lw=1.0, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("electric energy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def write_report(directory, reference, metrics, preds, label="network"):
    """rho.svg, E.svg and energy.svg under ``directory``; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    out = []
    if preds:
        for q in ("rho", "E"):
            out.append(plot_profiles(os.path.join(directory, f"{q}.svg"), reference.x, reference, preds, q, label))
    out.append(plot_energy(os.path.join(directory, "energy.svg"), reference, metrics, label))
    return out
