import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from apnn.errors import NumericOverflowError, TrainingDiverged
from apnn.experiments.problems import make_problem
from apnn.losses import BatchConfig, PenaltyConfig, loss_report, sample_batch
from apnn.model import InputMap, build_networks
from apnn.physics import FourierFeatures
from apnn.quadrature import gauss_legendre
from apnn.training import AdamState, TrainingConfig, adam_step, load_networks, train, write_manifest


def test_config_bounds_and_schedule():
    cfg = TrainingConfig(max_iters=400)
    assert cfg.decay_every == 100
    assert cfg.lr_at(0) == 1e-3 and cfg.lr_at(99) == 1e-3 and cfg.lr_at(100) == 5e-4 and cfg.lr_at(399) == 1.25e-4
    for bad in ({"beta1": 1.0}, {"beta2": 0.0}, {"learning_rate": 0.0}, {"momentum": 0.9}):
        with pytest.raises(ValidationError):
            TrainingConfig(**bad)


def test_zero_gradient_leaves_parameters_and_counts_the_step():
    p = [np.arange(3.0)]
    new, state = adam_step(p, [np.zeros(3)], AdamState.zeros_like(p), TrainingConfig())
    np.testing.assert_array_equal(new[0], p[0])
    assert state.step == 1


@settings(max_examples=30, deadline=None)
@given(g=st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3), lr=st.floats(1e-5, 1e-1))
def test_first_step_moves_by_learning_rate_times_sign(g, lr):
    cfg = TrainingConfig(learning_rate=lr)
    p = [np.zeros(2)]
    new, _ = adam_step(p, [np.full(2, g)], AdamState.zeros_like(p), cfg)
    np.testing.assert_allclose(new[0], -lr * np.sign(g), rtol=1e-6 if abs(g) > 1e-2 else 1e-5)


def test_adam_matches_a_hand_computed_second_step():
    cfg = TrainingConfig(learning_rate=0.1)
    p = [np.array([1.0])]
    s = AdamState.zeros_like(p)
    p, s = adam_step(p, [np.array([2.0])], s, cfg)
    p, s = adam_step(p, [np.array([-1.0])], s, cfg)
    m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0
    v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0
    expected = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8) - 0.1 * (m / (1 - 0.81)) / (np.sqrt(v / (1 - 0.999**2)) + 1e-8)
    assert p[0][0] == pytest.approx(expected, rel=1e-14)
    assert s.step == 2


def test_adam_rejects_non_finite_and_mismatched_gradients():
    p = [np.zeros(2)]
    with pytest.raises(NumericOverflowError):
        adam_step(p, [np.array([np.nan, 0.0])], AdamState.zeros_like(p), TrainingConfig())
    with pytest.raises(ValueError):
        adam_step(p, [np.zeros(3)], AdamState.zeros_like(p), TrainingConfig())


def _tiny(method="mm", seed=0, problem_id="landau"):
    p = make_problem(problem_id, eps=0.5 if problem_id == "landau" else None)
    rule = gauss_legendre(8, p.omega)
    inputs = InputMap(FourierFeatures(p.k), p.n_uq)
    ns = build_networks(method, inputs, hidden=(6, 6), seed=seed)
    return p, rule, inputs, ns


BATCH = BatchConfig(n_domain=16, n_ic=8, n_conservation=8)


@pytest.mark.parametrize("method", ["mm", "mc", "pinn"])
def test_training_reduces_the_loss(method):
    p, rule, inputs, ns = _tiny(method)
    pen = PenaltyConfig()
    val = sample_batch(p, BATCH, np.random.default_rng(99))
    before = loss_report(method, ns.nets, val, p, pen, rule, inputs)["total"]
    res = train(ns, p, pen, BATCH, rule, TrainingConfig(max_iters=60, learning_rate=5e-3, log_every=20))
    after = loss_report(method, res.networks.nets, val, p, pen, rule, inputs)["total"]
    assert after < before
    assert [r["iter"] for r in res.log] == [20, 40, 60]
    assert all(np.isfinite(r["validation_total"]) for r in res.log)
    assert res.state.step == 60


def test_training_is_bitwise_reproducible():
    logs, params = [], []
    for _ in range(2):
        p, rule, inputs, ns = _tiny("mc", seed=4)
        res = train(ns, p, PenaltyConfig(), BATCH, rule, TrainingConfig(max_iters=15, log_every=5, seed=4))
        logs.append([{k: v for k, v in r.items() if k != "seconds"} for r in res.log])
        params.append(res.networks.nets["f"].weights[0].copy())
    assert logs[0] == logs[1]
    assert np.array_equal(params[0], params[1])


def test_log_and_checkpoints_are_written(tmp_path):
    p, rule, inputs, ns = _tiny("mm")
    res = train(ns, p, PenaltyConfig(), BATCH, rule,
                TrainingConfig(max_iters=10, log_every=5, checkpoint_every=5), out_dir=str(tmp_path))
    lines = [json.loads(s) for s in (tmp_path / "log.jsonl").read_text().splitlines()]
    assert [r["iter"] for r in lines] == [5, 10]
    assert {"total", "residual_macro", "ic_rho", "validation_total"} <= set(lines[0])
    back, header = load_networks(str(tmp_path / "checkpoints"), "mm", inputs)
    assert header["iteration"] == 10
    for name in ns.names:
        for a, b in zip(back.nets[name].parameters(), res.networks.nets[name].parameters()):
            assert np.array_equal(a, b)


def test_divergence_aborts_and_keeps_the_last_checkpoint(tmp_path):
    p, rule, inputs, ns = _tiny("pinn")
    cfg = TrainingConfig(max_iters=50, divergence_threshold=1e-30, divergence_patience=4, checkpoint_every=2)
    with pytest.raises(TrainingDiverged):
        train(ns, p, PenaltyConfig(), BATCH, rule, cfg, out_dir=str(tmp_path))
    _, header = load_networks(str(tmp_path / "checkpoints"), "pinn", inputs)
    assert header["iteration"] == 2


def test_uq_training_runs():
    p, rule, inputs, ns = _tiny("mm", problem_id="uq")
    res = train(ns, p, PenaltyConfig(), BATCH, rule, TrainingConfig(max_iters=3, log_every=1))
    assert len(res.log) == 3


def test_manifest(tmp_path):
    m = write_manifest(str(tmp_path / "m.json"), {"a": 1}, {"training": 3}, "s", "f", ["x"])
    on_disk = json.loads((tmp_path / "m.json").read_text())
    assert on_disk["config"] == {"a": 1} and on_disk["seeds"] == {"training": 3}
    assert isinstance(m["git_describe"], str) and on_disk["numpy"] == np.__version__
