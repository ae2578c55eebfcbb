"""Benchmark suites: inference scaling, accuracy sweep, and learning cost.

Each suite writes plain CSV tables (one row per measurement cell) meant
for external plotting.  Cells are independent; set the ``PGFAD_THREADS``
environment variable to run them on a thread pool.  Output rows are
buffered and written in a fixed order regardless of scheduling, so the
files are deterministic given the flags and seed.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .fit import FitProblem, fit
from .model import ModelParams, Observations, log_likelihood
from .sim import simulate_many
from .trunc import TruncConfig, adaptive_loglik

__all__ = ["inference_scaling", "accuracy_sweep", "learning", "run_method"]

LAMBDA_GRID = (10, 25, 50, 100, 250, 500, 1000)
DELTA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))  # 0.05 .. 0.95
ACCURACY_LAMBDAS = (12.5, 55.0, 105.0, 75.0, 20.0)
LEARNING_KS = (2, 4, 6, 8, 10)


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get("PGFAD_THREADS", "1")))
    except ValueError:
        return 1


def _map_cells(fn, cells):
    workers = _n_workers()
    if workers == 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def run_method(params: ModelParams, obs: Observations, method: str, trunc_cap: int = 2500):
    """Evaluate one likelihood with one method; never raises on overflow.

    Returns a dict with value, status, elapsed seconds, and (for the
    truncated method) the final N, the convergence flag, the final
    iteration's seconds and the total adaptive seconds.
    """
    out = {
        "method": method,
        "value": "",
        "status": "ok",
        "seconds": "",
        "trunc_n": "",
        "trunc_converged": "",
        "seconds_total": "",
    }
    t0 = time.perf_counter()
    try:
        if method == "ad-lns":
            out["value"] = f"{log_likelihood(params, obs):.10f}"
            out["seconds"] = f"{time.perf_counter() - t0:.6f}"
        elif method == "ad-float":
            out["value"] = f"{log_likelihood(params, obs, backend='float'):.10f}"
            out["seconds"] = f"{time.perf_counter() - t0:.6f}"
        elif method == "trunc":
            value, n_final, converged = adaptive_loglik(
                params, obs, TruncConfig(cap=trunc_cap)
            )
            total = time.perf_counter() - t0
            t1 = time.perf_counter()
            from .trunc import truncated_loglik

            truncated_loglik(params, obs, n_final)
            final_iter = time.perf_counter() - t1
            out["value"] = f"{value:.10f}"
            out["trunc_n"] = str(n_final)
            out["trunc_converged"] = str(converged).lower()
            out["seconds"] = f"{final_iter:.6f}"
            out["seconds_total"] = f"{total:.6f}"
            if not converged:
                out["status"] = "not-converged"
        else:
            raise ValueError(f"unknown method {method!r}")
    except (OverflowError, ArithmeticError):
        out["status"] = "numeric-overflow"
        out["seconds"] = f"{time.perf_counter() - t0:.6f}"
    return out


def _write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def inference_scaling(out_dir, seed: int = 0, lambdas=LAMBDA_GRID,
                      trunc_cap: int = 2500, methods=("ad-lns", "ad-float", "trunc")):
    """Runtime/stability of each method as the immigration rate grows.

    K = 5 steps, detection 0.5, Bernoulli(0.5) and Poisson(0.5) offspring,
    Poisson(Lambda) immigration; data simulated at the true parameters.
    """
    cells = []
    for family in ("bernoulli", "poisson"):
        for lam in lambdas:
            params = ModelParams.build(5, 0.5, family, 0.5, "poisson", float(lam))
            obs = Observations(simulate_many(params, seed, 1)[0].y)
            for method in methods:
                cells.append((family, lam, params, obs, method))

    def run(cell):
        family, lam, params, obs, method = cell
        r = run_method(params, obs, method, trunc_cap)
        return [method, family, lam, r["value"], r["seconds"], r["status"],
                r["trunc_n"], r["trunc_converged"], r["seconds_total"]]

    rows = _map_cells(run, cells)
    path = os.path.join(out_dir, "inference_scaling.csv")
    _write_csv(path, ["method", "offspring", "lambda", "value", "seconds",
                      "status", "trunc_n", "trunc_converged", "seconds_total"], rows)
    return path


def accuracy_sweep(out_dir, seed: int = 0, deltas=DELTA_GRID, trunc_cap: int = 2500,
                   methods=("ad-lns", "ad-float", "trunc")):
    """Log-likelihood as the offspring parameter moves around its true 0.5.

    The five-step model with immigration rates (12.5, 55, 105, 75, 20) and
    detection 0.5; the data are simulated at delta = 0.5 and every method
    is evaluated along the whole delta grid.
    """
    cells = []
    for family in ("bernoulli", "poisson"):
        true = ModelParams.build(5, 0.5, family, 0.5, "poisson", ACCURACY_LAMBDAS)
        obs = Observations(simulate_many(true, seed, 1)[0].y)
        for delta in deltas:
            params = ModelParams.build(5, 0.5, family, float(delta),
                                       "poisson", ACCURACY_LAMBDAS)
            for method in methods:
                cells.append((family, delta, params, obs, method))

    def run(cell):
        family, delta, params, obs, method = cell
        r = run_method(params, obs, method, trunc_cap)
        return [method, family, delta, r["value"], r["seconds"], r["status"],
                r["trunc_n"], r["trunc_converged"]]

    rows = _map_cells(run, cells)
    path = os.path.join(out_dir, "accuracy_sweep.csv")
    _write_csv(path, ["method", "offspring", "delta", "value", "seconds",
                      "status", "trunc_n", "trunc_converged"], rows)
    return path


def learning(out_dir, seed: int = 0, ks=LEARNING_KS, n_realizations: int = 20):
    """Cost of exact-gradient vs central-difference fitting.

    For each K: Poisson(5) immigration, detection 0.6, time-varying
    Poisson(delta_k) offspring with delta_k drawn once from Exp(1); fit all
    K offspring parameters from delta = 1 on the given realizations.
    Also writes one objective-trace file per (K, gradient mode).
    """
    rng = np.random.default_rng(seed)
    rows = []
    for K in ks:
        deltas = rng.exponential(1.0, size=K)
        deltas = np.clip(deltas, 0.05, None)  # keep rates sanely positive
        true = ModelParams.build(K, 0.6, "poisson", deltas, "poisson", 5.0)
        datasets = [Observations(t.y) for t in simulate_many(true, seed + 1000 * K,
                                                             n_realizations)]
        init = ModelParams.build(K, 0.6, "poisson", 1.0, "poisson", 5.0)
        free = np.zeros(3 * K, dtype=bool)
        free[K:2 * K] = True  # every offspring parameter
        for mode in ("exact", "numeric-central"):
            res = fit(FitProblem(init, datasets, free=free, grad_mode=mode))
            rows.append([
                K, mode, f"{res.objective_equivalents():.1f}", res.n_obj_evals,
                res.n_grad_evals, f"{res.grad_obj_ratio:.2f}",
                f"{res.wall_time:.3f}", f"{res.final_objective:.6f}",
                str(res.converged).lower(),
            ])
            _write_csv(
                os.path.join(out_dir, f"learning_trace_K{K}_{mode}.csv"),
                ["iteration", "objective"],
                [[i, f"{v:.8f}"] for i, v in enumerate(res.objective_trace)],
            )
    path = os.path.join(out_dir, "learning.csv")
    _write_csv(path, ["K", "grad_mode", "obj_equivalents", "n_obj_evals",
                      "n_grad_evals", "grad_obj_ratio", "wall_seconds",
                      "final_objective", "converged"], rows)
    return path
