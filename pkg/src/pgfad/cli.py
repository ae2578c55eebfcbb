"""Command-line driver: simulate | loglik | grad | fit | bench.

Every command is deterministic given its flags and seed.  Exit code 0
means no error status; a numeric overflow in the float64 method or any
failure exits nonzero.  File formats are documented in
:mod:`pgfad.files`.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import bench as bench_suites
from .bench import run_method
from .files import load_config, load_observations, write_observations
from .fit import FitProblem, fit, numeric_gradient
from .model import Observations, grad_log_likelihood, param_names
from .sim import simulate_many

__all__ = ["main", "cmd_simulate", "cmd_loglik", "cmd_grad", "cmd_fit", "cmd_bench"]


def cmd_simulate(args) -> int:
    params = load_config(args.config)
    trajs = simulate_many(params, args.seed, args.datasets)
    write_observations(args.out, [Observations(t.y) for t in trajs])
    print(f"wrote {args.datasets} dataset(s) to {args.out}")
    if args.latent:
        blocks = []
        for t in trajs:
            lines = ["k,n"] + [f"{k},{n}" for k, n in enumerate(t.n, start=1)]
            blocks.append("\n".join(lines))
        with open(args.latent, "w", encoding="utf-8") as fh:
            fh.write("\n\n".join(blocks) + "\n")
        print(f"wrote latent trajectories to {args.latent}")
    return 0


def cmd_loglik(args) -> int:
    params = load_config(args.config)
    datasets = load_observations(args.obs)
    status_ok = True
    total = 0.0
    total_seconds = 0.0
    for i, obs in enumerate(datasets, start=1):
        r = run_method(params, obs, args.method, args.trunc_cap)
        line = f"dataset={i} method={r['method']} status={r['status']}"
        if r["value"]:
            line += f" loglik={r['value']}"
            total += float(r["value"])
        line += f" seconds={r['seconds']}"
        if args.method == "trunc":
            line += (f" trunc_n={r['trunc_n']} converged={r['trunc_converged']}"
                     f" seconds_total={r['seconds_total']}")
        print(line)
        if r["status"] != "ok":
            status_ok = False
        if r["seconds"]:
            total_seconds += float(r["seconds"])
    if len(datasets) > 1 and status_ok:
        print(f"total method={args.method} loglik={total:.10f} "
              f"seconds={total_seconds:.6f}")
    return 0 if status_ok else 1


def cmd_grad(args) -> int:
    params = load_config(args.config)
    datasets = load_observations(args.obs)
    t0 = time.perf_counter()
    if args.mode == "exact":
        g = np.zeros(3 * params.K)
        for obs in datasets:
            g += grad_log_likelihood(params, obs)
    else:
        g = numeric_gradient(params, datasets, scheme="central")
    seconds = time.perf_counter() - t0
    print("param,value")
    for name, v in zip(param_names(params.K), g):
        print(f"{name},{v:.10g}")
    print(f"# mode={args.mode} seconds={seconds:.6f}", file=sys.stderr)
    return 0


def _parse_free(spec: str, K: int) -> np.ndarray:
    """'all' or comma-separated rho|delta|lambda tokens, optionally indexed.

    Examples: ``delta``, ``rho,lambda``, ``delta[2],delta[3]``.
    """
    free = np.zeros(3 * K, dtype=bool)
    base = {"rho": 0, "delta": K, "lambda": 2 * K}
    for token in spec.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token == "all":
            free[:] = True
            continue
        if "[" in token:
            name, _, idx = token.partition("[")
            k = int(idx.rstrip("]"))
            if name not in base or not 1 <= k <= K:
                raise ValueError(f"bad parameter token {token!r}")
            free[base[name] + k - 1] = True
        else:
            if token not in base:
                raise ValueError(f"bad parameter token {token!r}")
            free[base[token]:base[token] + K] = True
    return free


def cmd_fit(args) -> int:
    params = load_config(args.config)
    datasets = load_observations(args.obs)
    free = _parse_free(args.free, params.K)
    mode = "exact" if args.grad == "exact" else "numeric-central"
    res = fit(FitProblem(params, datasets, free=free, grad_mode=mode))
    print(f"converged={str(res.converged).lower()} "
          f"final_objective={res.final_objective:.8f} "
          f"n_obj_evals={res.n_obj_evals} n_grad_evals={res.n_grad_evals} "
          f"obj_equivalents={res.objective_equivalents():.1f} "
          f"wall_seconds={res.wall_time:.3f}")
    print("param,estimate")
    for name, v, is_free in zip(param_names(params.K), res.theta_hat.flat(), free):
        if is_free:
            print(f"{name},{v:.10g}")
    print("iteration,objective")
    for i, v in enumerate(res.objective_trace):
        print(f"{i},{v:.8f}")
    return 0


def cmd_bench(args) -> int:
    if args.suite == "inference-scaling":
        path = bench_suites.inference_scaling(args.out, seed=args.seed,
                                              trunc_cap=args.trunc_cap)
    elif args.suite == "accuracy-sweep":
        path = bench_suites.accuracy_sweep(args.out, seed=args.seed,
                                           trunc_cap=args.trunc_cap)
    elif args.suite == "learning":
        path = bench_suites.learning(args.out, seed=args.seed)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.suite)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pgfad",
        description="Exact inference and learning for integer hidden Markov models.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate observation datasets")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--datasets", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--latent", default=None,
                   help="also write the latent counts to this path")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("loglik", help="evaluate the log-likelihood")
    s.add_argument("--config", required=True)
    s.add_argument("--obs", required=True)
    s.add_argument("--method", choices=["ad-lns", "ad-float", "trunc"],
                   default="ad-lns")
    s.add_argument("--trunc-cap", type=int, default=2500)
    s.set_defaults(func=cmd_loglik)

    s = sub.add_parser("grad", help="gradient of the log-likelihood")
    s.add_argument("--config", required=True)
    s.add_argument("--obs", required=True)
    s.add_argument("--mode", choices=["exact", "numeric"], default="exact")
    s.set_defaults(func=cmd_grad)

    s = sub.add_parser("fit", help="maximum-likelihood estimation")
    s.add_argument("--config", required=True,
                   help="model config providing initial parameter values")
    s.add_argument("--obs", required=True)
    s.add_argument("--grad", choices=["exact", "numeric"], default="exact")
    s.add_argument("--free", default="all",
                   help="free parameters: all | rho|delta|lambda[,...] | name[k]")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("bench", help="run a benchmark suite")
    s.add_argument("--suite", choices=["inference-scaling", "accuracy-sweep",
                                       "learning"], required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trunc-cap", type=int, default=2500)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
