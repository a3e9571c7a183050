"""Adam training loop with resampled batches, JSON-lines logging and checkpoints."""
from __future__ import annotations

import json
import os
import subprocess
import time
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .autodiff.checkpoint import load_checkpoint, save_checkpoint
from .autodiff.mlp import loss_gradient
from .errors import NumericOverflowError, TrainingDiverged
from .losses import empirical_loss, loss_report, sample_batch
from .model import NetworkSet


class TrainingConfig(BaseModel):
    """Optimiser and loop settings; every value is a free choice recorded in the run manifest."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, gt=0, lt=1)
    beta2: float = Field(0.999, gt=0, lt=1)
    eps_hat: float = Field(1e-8, gt=0)
    max_iters: int = Field(20000, ge=0)
    lr_decay: float = Field(0.5, gt=0, le=1)
    decay_every: int | None = Field(None, ge=1)  # default: a quarter of max_iters
    resample_every: int = Field(1, ge=1)
    checkpoint_every: int = Field(1000, ge=1)
    log_every: int = Field(100, ge=1)
    seed: int = 0
    divergence_threshold: float = Field(1e6, gt=0)
    divergence_patience: int = Field(100, ge=1)

    @model_validator(mode="after")
    def _default_decay(self):
        if self.decay_every is None:
            self.decay_every = max(1, self.max_iters // 4)
        return self

    def lr_at(self, iteration):
        return self.learning_rate * self.lr_decay ** (iteration // self.decay_every)


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state, config, lr=None):
    """Bias-corrected Adam update; returns new parameter arrays and a new state."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter, gradient and moment lists differ in length")
    lr = config.learning_rate if lr is None else lr
    b1, b2 = config.beta1, config.beta2
    step = state.step + 1
    c1 = 1.0 - b1**step
    c2 = 1.0 - b2**step
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch {p.shape} / {g.shape} / {m.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericOverflowError("non-finite gradient passed to the optimiser")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        update = lr * (m / c1) / (np.sqrt(v / c2) + config.eps_hat)
        new_p.append((p - update).astype(p.dtype, copy=False))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, step)


def _flat_params(netset):
    out = []
    for name in netset.names:
        out.extend(netset.nets[name].parameters())
    return out


def _assign(netset, flat):
    k = 0
    for name in netset.names:
        net = netset.nets[name]
        n = len(net.weights)
        net.weights = list(flat[k:k + 2 * n:2])
        net.biases = list(flat[k + 1:k + 2 * n:2])
        k += 2 * n


@dataclass
class TrainResult:
    networks: NetworkSet
    log: list = field(default_factory=list)
    state: AdamState | None = None
    iterations: int = 0
    seconds: float = 0.0


def save_networks(netset, directory, seed, iteration, extra=None):
    os.makedirs(directory, exist_ok=True)
    for name, net in netset.nets.items():
        save_checkpoint(os.path.join(directory, f"{name}.ckpt"), net, seed=seed, iteration=iteration,
                        extra={"method": netset.method, "name": name, **(extra or {})})


def load_networks(directory, method, inputs):
    from .model import NET_ROLES
    nets, header = {}, None
    for name in NET_ROLES[method]:
        nets[name], header = load_checkpoint(os.path.join(directory, f"{name}.ckpt"))
    return NetworkSet(method, nets, inputs), header


def train(netset, problem, penalties, batch_config, rule, config, out_dir=None, callback=None):
    """Minimise the method's empirical loss with Adam.

    Writes ``log.jsonl`` and ``checkpoints/`` under ``out_dir`` when given.
    Raises TrainingDiverged when the loss stays above the threshold for
    ``divergence_patience`` consecutive iterations; the last checkpoint written
    before that point is kept.
    """
    method, inputs, names = netset.method, netset.inputs, netset.names
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 1]))
    val_rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 2]))
    validation = sample_batch(problem, batch_config, val_rng)
    params = _flat_params(netset)
    state = AdamState.zeros_like(params)
    log, above = [], 0
    log_fh = None
    ckpt_dir = os.path.join(out_dir, "checkpoints") if out_dir else None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        log_fh = open(os.path.join(out_dir, "log.jsonl"), "w")
    start = time.perf_counter()
    batch = None

    def evaluator(*tracked):
        return empirical_loss(method, dict(zip(names, tracked)), batch, problem, penalties, rule, inputs)

    try:
        for it in range(config.max_iters):
            if batch is None or it % config.resample_every == 0:
                batch = sample_batch(problem, batch_config, rng)
            lg = loss_gradient([netset.nets[n] for n in names], evaluator)
            grads = [a for g in lg.grads for a in g.arrays()]
            params, state = adam_step(params, grads, state, config, lr=config.lr_at(it))
            _assign(netset, params)
            above = above + 1 if lg.total > config.divergence_threshold else 0
            if above >= config.divergence_patience:
                raise TrainingDiverged(
                    f"loss above {config.divergence_threshold:g} for {above} iterations (iteration {it})")
            done = it + 1
            if done % config.log_every == 0 or done == config.max_iters:
                val = loss_report(method, netset.nets, validation, problem, penalties, rule, inputs)
                record = {"iter": done, "total": lg.total, **lg.terms, "validation_total": val["total"],
                          "lr": config.lr_at(it), "seconds": round(time.perf_counter() - start, 3)}
                log.append(record)
                if log_fh:
                    log_fh.write(json.dumps(record) + "\n")
                    log_fh.flush()
                if callback:
                    callback(record)
            if ckpt_dir and done % config.checkpoint_every == 0:
                save_networks(netset, ckpt_dir, config.seed, done)
    finally:
        if log_fh:
            log_fh.close()
    if ckpt_dir:
        save_networks(netset, ckpt_dir, config.seed, config.max_iters)
    return TrainResult(netset, log, state, config.max_iters, time.perf_counter() - start)


def git_describe(cwd=None):
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=cwd, capture_output=True,
                             text=True, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_manifest(path, config_tree, seeds, started, finished, artifacts, notes=None):
    manifest = {"config": config_tree, "seeds": seeds, "git_describe": git_describe(),
                "started": started, "finished": finished, "artifacts": artifacts,
                "numpy": np.__version__, "notes": notes or {}}
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return manifest
