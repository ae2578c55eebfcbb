"""Truncated forward algorithm: the independent likelihood oracle.

Caps the latent population at ``N`` and runs the classical discrete-HMM
forward recursion in log space.  Transition rows are direct log-sum-exp
convolutions of the offspring-sum distribution with the immigration pmf,
O(N^2) per row and O(K N^3) for a whole likelihood, which is acceptable at
oracle scale.  The adaptive wrapper doubles ``N`` until the log-likelihood
stops changing at the configured precision or ``N`` exceeds the cap; mass
cut off by a too-small ``N`` simply biases the value downward, which the
doubling loop detects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .model import DistSpec, ModelParams, Observations

__all__ = ["TruncConfig", "transition_row", "truncated_loglik", "adaptive_loglik"]


@dataclass(frozen=True)
class TruncConfig:
    cap: int = 2500
    convergence_digits: int = 5


def _offspring_sum_logpmf_matrix(spec: DistSpec, N: int) -> np.ndarray:
    """log p(sum of n offspring = z) for n, z = 0..N; row n is one parent count.

    Closed forms: Bernoulli(d) parents sum to Binomial(n, d); Poisson(d)
    parents sum to Poisson(n d); geometric(p) parents sum to a negative
    binomial with n successes.
    """
    n = np.arange(N + 1)[:, None]
    z = np.arange(N + 1)[None, :]
    with np.errstate(divide="ignore"):
        if spec.family == "bernoulli":
            out = stats.binom.logpmf(z, n, spec.param)
        elif spec.family == "poisson":
            out = stats.poisson.logpmf(z, n * spec.param)
        else:
            out = stats.nbinom.logpmf(z, np.maximum(n, 1), spec.param)
    out[0, :] = -np.inf
    out[0, 0] = 0.0  # no parents, no offspring
    return out


def _count_logpmf(spec: DistSpec, N: int) -> np.ndarray:
    """log pmf of one count distribution on 0..N (used for immigration)."""
    k = np.arange(N + 1)
    with np.errstate(divide="ignore"):
        if spec.family == "poisson":
            return stats.poisson.logpmf(k, spec.param)
        if spec.family == "bernoulli":
            out = np.full(N + 1, -np.inf)
            out[0] = math.log1p(-spec.param)
            if N >= 1:
                out[1] = math.log(spec.param)
            return out
        return stats.nbinom.logpmf(k, 1, spec.param)


def _log_conv(la: np.ndarray, lb: np.ndarray, N: int) -> np.ndarray:
    """out[i] = logsumexp_j (la[j] + lb[i-j]) for i = 0..N."""
    out = np.full(N + 1, -np.inf)
    for i in range(N + 1):
        hi = min(i, la.shape[0] - 1)
        terms = la[: hi + 1] + lb[i - hi : i + 1][::-1]
        m = terms.max()
        if m == -np.inf:
            continue
        out[i] = m + math.log(np.exp(terms - m).sum())
    return out


def transition_row(n: int, k: int, params: ModelParams, N: int) -> np.ndarray:
    """Row n of the step-k transition matrix as probabilities over 0..N."""
    if not 0 <= n <= N:
        raise ValueError(f"n must be in 0..{N}")
    if not 1 <= k <= params.K:
        raise ValueError(f"k must be in 1..{params.K}")
    lz = _offspring_sum_logpmf_matrix(params.offspring[k - 1], N)[n]
    lm = _count_logpmf(params.immigration[k - 1], N)
    return np.exp(_log_conv(lz, lm, N))


def truncated_loglik(params: ModelParams, obs: Observations, N: int) -> float:
    """Forward recursion under the population cap N, in log space.

    The transition step is the direct per-column convolution of the
    offspring-sum rows with the immigration pmf; one fused log-sum-exp per
    destination state keeps the summation order fixed and stable.
    """
    if obs.K != params.K:
        raise ValueError("observation length does not match the model")
    if N < 0:
        raise ValueError("N must be nonnegative")
    lalpha = np.full(N + 1, -np.inf)
    lalpha[0] = 0.0
    states = np.arange(N + 1)
    cache: dict = {}
    for k in range(1, params.K + 1):
        osp = params.offspring[k - 1]
        imm = params.immigration[k - 1]
        key = ("B", osp.family, osp.param)
        if key not in cache:
            cache[key] = _offspring_sum_logpmf_matrix(osp, N)
        lB = cache[key]
        mkey = ("M", imm.family, imm.param)
        if mkey not in cache:
            # padded so that lMwin[i] reversed gives lM[i - z] for z = 0..N
            lm = _count_logpmf(imm, N)
            pad = np.concatenate([np.full(N, -np.inf), lm])
            cache[mkey] = sliding_window_view(pad, N + 1)[:, ::-1]
        lMwin = cache[mkey]

        C = lalpha[:, None] + lB  # C[n, z] = log alpha(n) + log p(z | n)
        lpred = np.full(N + 1, -np.inf)
        for i in range(N + 1):
            block = C[:, : i + 1] + lMwin[i][None, : i + 1]
            m = block.max()
            if m == -np.inf:
                continue
            lpred[i] = m + math.log(np.exp(block - m).sum())
        with np.errstate(divide="ignore"):
            lemis = stats.binom.logpmf(obs.y[k - 1], states, params.rho[k - 1])
        lalpha = lemis + lpred
    m = lalpha.max()
    if m == -np.inf:
        return -math.inf
    return float(m + math.log(np.exp(lalpha - m).sum()))


def adaptive_loglik(
    params: ModelParams, obs: Observations, cfg: TruncConfig | None = None
):
    """Double N until the value settles; returns (value, final N, converged)."""
    cfg = cfg or TruncConfig()
    tol = 10.0 ** (-cfg.convergence_digits)
    maxy = max(obs.y) if obs.y else 0
    N = max(2 * maxy, 16)
    if N >= cfg.cap:
        return truncated_loglik(params, obs, cfg.cap), cfg.cap, False
    v = truncated_loglik(params, obs, N)
    while True:
        N2 = 2 * N
        if N2 > cfg.cap:
            return v, N, False
        v2 = truncated_loglik(params, obs, N2)
        if math.isfinite(v2) and abs(v2 - v) < tol:
            return v2, N2, True
        v, N = v2, N2
