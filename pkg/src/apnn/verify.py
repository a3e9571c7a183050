"""Numerical property suite run by ``apnn verify`` and the acceptance tests.

Every check returns a :class:`Check`; the suite is deterministic (fixed seeds)
and takes well under a minute on one core.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .autodiff.mlp import InputJet, Jet, forward_jet, xavier_init
from .autodiff.tape import Var
from .experiments.problems import make_problem
from .limit_losses import limit_loss_mc, limit_loss_mm
from .losses import BatchConfig, PenaltyConfig, empirical_loss, loss_report, sample_batch
from .model import InputMap, build_networks, eval_jet
from .physics.fields import FourierFeatures, ScaleField, maxwellian
from .physics.limit import limit_residual_mass_conservation, limit_residual_micro_macro
from .physics.operators import fokker_planck_L
from .physics.residuals import residual_mass_conservation, residual_micro_macro
from .quadrature import gauss_legendre, moment
from .reference import make_grid, solve_kinetic, solve_limit


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{verdict} {self.name}: {self.value:.3e} vs tol {self.tolerance:.1e}{extra}"


def _np(a):
    return a.data if isinstance(a, Var) else np.asarray(a)


# -- quadrature ------------------------------------------------------------

def check_quadrature(n=32, omega=(-6.0, 6.0), max_degree=None, tol=1e-12):
    rule = gauss_legendre(n, omega)
    a, b = omega
    max_degree = 2 * n - 1 if max_degree is None else max_degree
    worst = 0.0
    for k in range(max_degree + 1):
        exact = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
        # odd moments vanish on symmetric intervals, so scale by the integral of |v|^k
        scale = max(abs(exact), (abs(b) ** (k + 1) + abs(a) ** (k + 1)) / (k + 1))
        worst = max(worst, abs(float(rule.weights @ rule.nodes**k) - exact) / scale)
    return Check("quadrature exactness", worst <= tol, worst, tol, f"n={n}, degree<={max_degree}")


# -- autodiff oracle ---------------------------------------------------------

def _coord_jet(pts):
    return InputJet.from_coordinates(pts, {"t": 0, "x": 1, "v": 2})


def _fd_jet(net, pts, quad, h=1e-5):
    """Central differences: first derivatives from values, second from exact first derivatives."""
    def val(p):
        return _np(forward_jet(net, _coord_jet(p), quad=quad).value)

    def first(p, name):
        return _np(forward_jet(net, _coord_jet(p), which=(name,), quad=quad)[name])

    out = {}
    for name, col in (("t", 0), ("x", 1), ("v", 2)):
        e = np.zeros(3)
        e[col] = h
        out[name] = (val(pts + e) - val(pts - e)) / (2 * h)
    if net.head == "zero_mean_v":
        # shifting every node also moves the subtracted node mean, which is constant
        # in v at a fixed point; difference the raw network instead
        raw = dataclasses.replace(net, head="identity")
        e = np.array([0.0, 0.0, h])
        out["v"] = (_np(forward_jet(raw, _coord_jet(pts + e)).value)
                    - _np(forward_jet(raw, _coord_jet(pts - e)).value)) / (2 * h)
    for name, (d, col) in {"xx": ("x", 1), "vv": ("v", 2), "tx": ("t", 1)}.items():
        e = np.zeros(3)
        e[col] = h
        out[name] = (first(pts + e, d) - first(pts - e, d)) / (2 * h)
    return out


def check_jets(seed=0, tol=1e-5):
    """Every jet component of random 5-hidden-layer nets against finite differences."""
    rng = np.random.default_rng(seed)
    quad = gauss_legendre(8, (-4.0, 4.0))
    worst = 0.0
    for head in ("identity", "softplus", "zero_mean_v"):
        net = xavier_init([3, 12, 12, 12, 12, 12, 1], int(rng.integers(1 << 31)), head=head)
        # perturb weights away from the symmetric Xavier draw for a generic test function
        net.weights = [w * 1.5 for w in net.weights]
        if head == "zero_mean_v":
            tx = rng.uniform(-1, 1, (6, 1, 2))
            pts = np.concatenate([np.repeat(tx, quad.n, axis=1),
                                  np.broadcast_to(quad.nodes[None, :, None], (6, quad.n, 1))], axis=2)
            q = quad
        else:
            pts, q = rng.uniform(-1, 1, (24, 3)), None
        jet = forward_jet(net, _coord_jet(pts), which=("t", "x", "v", "xx", "vv", "tx"), quad=q)
        fd = _fd_jet(net, pts, q)
        for name, ref in fd.items():
            got = _np(jet[name])
            err = np.max(np.abs(got - ref)) / max(np.max(np.abs(ref)), 1e-7)
            worst = max(worst, err)
    return Check("autodiff jets vs finite differences", worst <= tol, worst, tol, "norm-wise relative")


def _loss_value(method, nets, batch, problem, pen, rule, inputs):
    return loss_report(method, nets, batch, problem, pen, rule, inputs)["total"]


def check_param_gradients(seed=0, tol=1e-4, n_probe=12, h=1e-6):
    """Parameter gradients of the three losses against central differences on a 16-point batch."""
    from .autodiff.mlp import loss_gradient
    problem = make_problem("landau", eps=0.5)
    rule = gauss_legendre(8, problem.omega)
    inputs = InputMap(FourierFeatures(problem.k))
    pen = PenaltyConfig(residual=2.0, ic=1.0, ic_reconstructed_f=0.5, conservation=1.0)
    batch = sample_batch(problem, BatchConfig(n_domain=16, n_ic=16, n_conservation=16),
                         np.random.default_rng(seed))
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for method in ("mm", "mc", "pinn"):
        ns = build_networks(method, inputs, hidden=(8,) * 5, seed=seed)
        names = ns.names
        lg = loss_gradient([ns.nets[n] for n in names],
                           lambda *tr: empirical_loss(method, dict(zip(names, tr)), batch, problem, pen,
                                                      rule, inputs))
        exact, approx = [], []
        for _ in range(n_probe):
            ni = int(rng.integers(len(names)))
            net = ns.nets[names[ni]]
            layer = int(rng.integers(len(net.weights)))
            use_w = bool(rng.integers(2))
            arr = net.weights[layer] if use_w else net.biases[layer]
            idx = tuple(int(rng.integers(s)) for s in arr.shape)
            g = (lg.grads[ni].weights if use_w else lg.grads[ni].biases)[layer][idx]
            old = arr[idx]
            arr[idx] = old + h
            up = _loss_value(method, ns.nets, batch, problem, pen, rule, inputs)
            arr[idx] = old - h
            dn = _loss_value(method, ns.nets, batch, problem, pen, rule, inputs)
            arr[idx] = old
            exact.append(g)
            approx.append((up - dn) / (2 * h))
        exact, approx = np.array(exact), np.array(approx)
        worst = max(worst, np.linalg.norm(exact - approx) / max(np.linalg.norm(approx), 1e-12))
    return Check("loss parameter gradients vs finite differences", worst <= tol, worst, tol,
                 f"{n_probe} probes per method")


# -- asymptotic-preserving identities ----------------------------------------------

def _limit_problem():
    # mixing data with the scale field switched off entirely
    return dataclasses.replace(make_problem("mixing"), scale=ScaleField("constant", 0.0))


def check_ap_identity(seed=0, tol=1e-12):
    """eps = 0 residuals and losses equal the independently coded limit system."""
    problem = _limit_problem()
    rule = gauss_legendre(16, problem.omega)
    inputs = InputMap(FourierFeatures(problem.k))
    pen = PenaltyConfig(residual=3.0, ic=2.0, conservation=1.5)
    batch = sample_batch(problem, BatchConfig(n_domain=64, n_ic=32, n_conservation=32),
                         np.random.default_rng(seed))
    t, x, z = batch.t, batch.x, batch.z
    h = problem.background(x)
    eps = np.zeros_like(x)
    worst = 0.0

    def gap(a, b):
        a, b = _np(a), _np(b)
        return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))

    for s in range(3):
        ns = build_networks("mm", inputs, hidden=(10,) * 3, seed=seed + s)
        rho = eval_jet(ns.nets["rho"], inputs, t, x, z, which=("t", "x"))
        g = eval_jet(ns.nets["g"], inputs, t, x, z, which=("t", "x", "v", "vv"), rule=rule)
        phi = eval_jet(ns.nets["phi"], inputs, t, x, z, which=("x", "xx", "tx"))
        got = residual_micro_macro(rho, g, phi, rule, eps, h)
        ref = limit_residual_micro_macro(rho, g, phi, rule, h)
        worst = max(worst, *(gap(a, b) for a, b in zip(got, ref)))
        rep = loss_report("mm", ns.nets, batch, problem, pen, rule, inputs)
        lim = limit_loss_mm(ns.nets, batch, problem, pen, rule, inputs)
        worst = max(worst, max(abs(rep[k] - lim[k]) / max(1.0, abs(lim[k])) for k in lim))

        ns = build_networks("mc", inputs, hidden=(10,) * 3, seed=seed + s)
        rho = eval_jet(ns.nets["rho"], inputs, t, x, z, which=("t",))
        f = eval_jet(ns.nets["f"], inputs, t, x, z, v=rule.nodes, which=("t", "x", "v", "vv"))
        phi = eval_jet(ns.nets["phi"], inputs, t, x, z, which=("x", "xx"))
        got = residual_mass_conservation(rho, f, phi, rule, eps, h)
        ref = limit_residual_mass_conservation(rho, f, phi, rule, h)
        worst = max(worst, *(gap(a, b) for a, b in zip(got, ref)))
        rep = loss_report("mc", ns.nets, batch, problem, pen, rule, inputs)
        lim = limit_loss_mc(ns.nets, batch, problem, pen, rule, inputs)
        worst = max(worst, max(abs(rep[k] - lim[k]) / max(1.0, abs(lim[k])) for k in lim))
    return Check("AP identity (mm and mc at eps = 0)", worst <= tol, worst, tol, "3 random network states")


def check_kernel(seed=0, tol=1e-12):
    """L f = 0 for f = shifted Maxwellian, exact derivatives, at random field values."""
    rng = np.random.default_rng(seed)
    v = np.linspace(-6, 6, 41)
    a = rng.uniform(-2, 2, 50)
    w = v[None, :] + a[:, None]
    m = maxwellian(v[None, :], a[:, None])
    jet = Jet.from_parts(m, v=-w * m, vv=(w * w - 1.0) * m)
    worst = float(np.max(np.abs(_np(fokker_planck_L(jet, v, a)))))
    return Check("kernel of the Fokker-Planck operator", worst <= tol, worst, tol, "50 shifts")


def check_hard_conservation(seed=0, tol=1e-12, n=1000):
    problem = make_problem("landau")
    rule = gauss_legendre(32, problem.omega)
    inputs = InputMap(FourierFeatures(problem.k))
    ns = build_networks("mm", inputs, hidden=(16,) * 3, seed=seed)
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, problem.t_final, n)
    x = rng.uniform(*problem.domain, n)
    g = _np(eval_jet(ns.nets["g"], inputs, t, x, rule=rule).value)
    worst = float(np.max(np.abs(moment(rule, g))))
    return Check("hard conservation of the g network", worst <= tol, worst, tol, f"{n} points")


# -- reference solvers ----------------------------------------------------------------

def check_reference_mass(tol=1e-10):
    worst = 0.0
    for pid, eps in (("landau", 1.0), ("bump_on_tail", 1.0), ("riemann", None), ("mixing", None)):
        p = make_problem(pid, eps=eps)
        g = make_grid(p, 64, 48)
        for sol in (solve_kinetic(p, g, keep_f=False), solve_limit(p, g)):
            m = sol.mass()
            worst = max(worst, float(np.max(np.abs(m - m[0])) / abs(m[0])))
    return Check("reference mass conservation", worst <= tol, worst, tol, "kinetic and limit, 4 problems")


def check_reference_limit(tol=1e-2):
    p = make_problem("landau", eps=1e-3)
    g = make_grid(p, 256, 128)
    kin = solve_kinetic(p, g, times=[0.0, 0.1], keep_f=False)
    lim = solve_limit(p, g, times=[0.0, 0.1])
    err = float(np.linalg.norm(kin.rho[-1] - lim.rho[-1]) / np.linalg.norm(lim.rho[-1]))
    return Check("kinetic vs limit reference at eps = 1e-3, t = 0.1", err <= tol, err, tol, "Landau data")


def self_convergence_ratios(problem_id="mixing", sizes=(64, 128, 256, 512), t=0.1):
    """Error ratios e_N / e_2N using the finest grid pairs; about 2 for a first-order scheme."""
    p = make_problem(problem_id)
    sols = []
    for n in sizes:
        g = make_grid(p, n, 16)
        # fixed dt proportional to dx keeps dt/dx constant across levels
        sols.append(solve_limit(p, g, times=[t], dt=0.25 * g.dx).rho[-1])
    diffs = []
    for coarse, fine in zip(sols[:-1], sols[1:]):
        # restrict the fine grid to the coarse nodes (nodes x_i = a + i dx coincide)
        diffs.append(np.sqrt(np.mean((fine[::2] - coarse) ** 2)))
    return np.array(diffs[:-1]) / np.array(diffs[1:])


def check_self_convergence(low=1.6, high=2.6):
    ratios = self_convergence_ratios()
    r = float(ratios[-1])
    return Check("first-order self-convergence of the limit solver", low <= r <= high, r, high,
                 f"ratios {np.round(ratios, 3).tolist()}, expected in [{low}, {high}]")


PROPERTY_CHECKS = (check_quadrature, check_jets, check_param_gradients, check_ap_identity, check_kernel,
                   check_hard_conservation, check_reference_mass)
REFERENCE_CHECKS = (check_reference_limit, check_self_convergence)


def run_suite(checks=PROPERTY_CHECKS + REFERENCE_CHECKS, echo=None):
    out = []
    for fn in checks:
        start = time.perf_counter()
        res = fn()
        res.seconds = time.perf_counter() - start
        out.append(res)
        if echo:
            echo(res.line())
    return out
