"""Forward simulation of the integer HMM.

Sampling uses numpy's PCG64 generator via ``default_rng(seed)``, so a
trajectory is a portable fixture: the same (params, seed) pair reproduces
the same counts on any platform running the same numpy.  Per-individual
offspring draws are collapsed into their exact closed-form sums (binomial,
Poisson, negative binomial), and each step draws in a fixed order:
offspring sum, immigration, then the binomial observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DistSpec, ModelParams

__all__ = ["Trajectory", "simulate", "simulate_many"]


@dataclass(frozen=True)
class Trajectory:
    """Latent counts, observed counts, and the seed that produced them."""

    n: tuple
    y: tuple
    seed: int

    def __post_init__(self):
        if any(yk > nk for nk, yk in zip(self.n, self.y)):
            raise ValueError("observed counts cannot exceed latent counts")


def _offspring_sum(rng: np.random.Generator, spec: DistSpec, n: int) -> int:
    if n == 0:
        return 0
    if spec.family == "bernoulli":
        return int(rng.binomial(n, spec.param))
    if spec.family == "poisson":
        return int(rng.poisson(n * spec.param))
    return int(rng.negative_binomial(n, spec.param))


def _count_draw(rng: np.random.Generator, spec: DistSpec) -> int:
    if spec.family == "poisson":
        return int(rng.poisson(spec.param))
    if spec.family == "bernoulli":
        return int(rng.binomial(1, spec.param))
    return int(rng.negative_binomial(1, spec.param))


def simulate(params: ModelParams, seed: int) -> Trajectory:
    """One trajectory from the model, deterministic given the seed."""
    rng = np.random.default_rng(seed)
    n = 0
    ns, ys = [], []
    for k in range(params.K):
        z = _offspring_sum(rng, params.offspring[k], n)
        m = _count_draw(rng, params.immigration[k])
        n = z + m
        ns.append(n)
        ys.append(int(rng.binomial(n, params.rho[k])) if n else 0)
    return Trajectory(tuple(ns), tuple(ys), seed)


def simulate_many(params: ModelParams, seed: int, count: int) -> list[Trajectory]:
    """Independent trajectories from consecutive seeds seed, seed+1, ..."""
    return [simulate(params, seed + i) for i in range(count)]
