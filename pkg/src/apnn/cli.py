"""Command-line front end: ``apnn train | reference | evaluate | verify``.

Exit codes: 0 success, 2 configuration error, 3 missing input, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _set_threads(n):
    # must run before numpy loads its BLAS; the heavy imports below are deferred for this reason
    if n is None:
        n = os.environ.get("APNN_THREADS", "1")
    try:
        n = int(n)
    except ValueError:
        n = 0
    if n < 1:
        from .errors import ConfigError
        raise ConfigError(f"thread count must be a positive integer, got {n!r}")
    for var in THREAD_VARS:
        os.environ[var] = str(n)
    return n


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _load(args):
    from .config import load_config
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _write_config(cfg, directory):
    with open(os.path.join(directory, "config.json"), "w") as fh:
        json.dump(cfg.model_dump(), fh, indent=2, sort_keys=True)


def cmd_train(args):
    from .training import train, write_manifest
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    started = _now()
    problem = cfg.build_problem()
    nets = cfg.build_networks()
    log = None
    if not args.quiet:
        def log(r):
            print(f"iter {r['iter']:>7d}  loss {r['total']:.4e}  val {r['validation_total']:.4e}", flush=True)
    res = train(nets, problem, cfg.build_penalties(), cfg.batches, cfg.build_rule(), cfg.training,
                out_dir=args.out, callback=log)
    _write_config(cfg, args.out)
    write_manifest(os.path.join(args.out, "manifest.json"), cfg.model_dump(),
                   {"training": cfg.training.seed, "nets": cfg.nets.seed}, started, _now(),
                   {"checkpoints": os.path.join(args.out, "checkpoints"),
                    "log": os.path.join(args.out, "log.jsonl")},
                   {"threads": args.threads, "seconds": round(res.seconds, 3)})
    print(f"trained {res.iterations} iterations in {res.seconds:.1f} s -> {args.out}")
    return 0


def cmd_reference(args):
    from .reference import make_grid, solve_kinetic, solve_limit, write_solution
    from .training import write_manifest
    cfg = _load(args)
    started = _now()
    problem = cfg.build_problem()
    r = cfg.reference
    grid = make_grid(problem, r.nx, r.nv, r.cfl, r.dt_max)
    times = r.times or sorted({0.0, *problem.eval_times, *(cfg.problem.eval_times or ()), problem.t_final})
    kind = cfg.reference_kind()
    if kind == "kinetic":
        sol = solve_kinetic(problem, grid, times=times)
    else:
        sol = solve_limit(problem, grid, times=times)
    write_solution(sol, args.out)
    _write_config(cfg, args.out)
    write_manifest(os.path.join(args.out, "manifest.json"), cfg.model_dump(), {}, started, _now(),
                   {"solution": os.path.join(args.out, "solution.csv")}, {"kind": kind, **sol.meta})
    print(f"{kind} reference on {r.nx} x {r.nv} -> {args.out}")
    return 0


def _run_config(args):
    from .config import load_config
    if args.config:
        return load_config(args.config)
    path = os.path.join(args.run, "config.json")
    if not os.path.exists(path):
        from .errors import MissingInputError
        raise MissingInputError(f"no config.json in run directory {args.run}; pass --config")
    return load_config(path)


def cmd_evaluate(args):
    from .experiments.evaluate import evaluate, write_results
    from .experiments.report import write_report
    from .reference import read_solution
    from .training import load_networks
    cfg = _run_config(args)
    problem = cfg.build_problem()
    rule = cfg.build_rule()
    ckpt = os.path.join(args.run, "checkpoints")
    nets, _ = load_networks(ckpt, cfg.method.name, cfg.build_inputs())
    ref_dir = args.reference or cfg.reference.path
    if not ref_dir:
        from .errors import MissingInputError
        raise MissingInputError("no reference directory given (--reference or [reference].path)")
    ref = read_solution(ref_dir)
    times = cfg.problem.eval_times or problem.eval_times
    metrics, preds = evaluate(nets, problem, rule, ref, times=times, energy_times=cfg.problem.energy_times,
                              n_draws=cfg.problem.uq_draws, seed=cfg.training.seed)
    out = args.out or os.path.join(args.run, "evaluation")
    os.makedirs(out, exist_ok=True)
    results = os.path.join(out, "results.csv")
    if os.path.exists(results):
        os.remove(results)
    write_results(results, metrics.rows(problem.id, cfg.method.name, problem.scale.eps0))
    write_report(out, ref, metrics, preds, label=cfg.method.name)
    for (q, t), v in sorted(metrics.rel_l2.items()):
        print(f"rel_l2 {q:<5s} t={t:<6g} {v:.4e}")
    print(f"results -> {results}")
    return 0


def cmd_verify(args):
    from .verify import run_suite
    results = run_suite(echo=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return 4 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="apnn", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $APNN_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="TOML run configuration")
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)

    sp = sub.add_parser("train", help="train the networks of one configuration")
    common(sp)
    sp.add_argument("--out", required=True, help="run directory")
    sp.add_argument("--seed", type=int, default=None, help="override the training and network seeds")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("reference", help="grid reference solution for one configuration")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_reference)

    sp = sub.add_parser("evaluate", help="errors of a trained run against a reference")
    common(sp, config_required=False)
    sp.add_argument("--run", required=True, help="run directory written by 'train'")
    sp.add_argument("--reference", default=None, help="directory written by 'reference'")
    sp.add_argument("--out", default=None, help="output directory (default RUN/evaluation)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("verify", help="run the numerical property suite")
    sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    from .errors import ApnnError
    try:
        args.threads = _set_threads(args.threads)
        return args.func(args)
    except ApnnError as exc:
        print(f"apnn: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"apnn: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
