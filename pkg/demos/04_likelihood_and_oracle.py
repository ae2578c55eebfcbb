"""Exact integer-HMM likelihoods, cross-checked three ways.

The population model: each individual present at step k-1 contributes an
offspring count, immigrants arrive, and the resulting population is
observed through binomial thinning.  The likelihood of the observed
counts is computed exactly by evaluating nested derivatives of the
model's probability generating functions; the truncated forward algorithm
provides an independent oracle.
"""

from scipy.stats import poisson

from pgfad import (
    ModelParams,
    Observations,
    adaptive_loglik,
    log_likelihood,
    simulate,
)

# a one-step model has a closed form: thinning Poisson(lam) by rho gives
# Poisson(rho * lam)
mp1 = ModelParams.build(1, 0.6, "bernoulli", 0.5, "poisson", 10.0)
print("K=1 closed form check:")
print("  PGF forward :", log_likelihood(mp1, Observations((7,))))
print("  analytic    :", poisson.logpmf(7, 6.0))

# the five-step model with large immigration pulses
mp = ModelParams.build(
    5, 0.5, "bernoulli", 0.5, "poisson", (12.5, 55.0, 105.0, 75.0, 20.0)
)
traj = simulate(mp, 1)
obs = Observations(traj.y)
print("\nfive-step model, observed counts:", traj.y)

ll = log_likelihood(mp, obs)
tv, n_used, converged = adaptive_loglik(mp, obs)
print(f"  nested AD over LNS : {ll:.10f}")
print(f"  truncated oracle   : {tv:.10f}  (N={n_used}, converged={converged})")
print(f"  difference         : {abs(ll - tv):.2e}")

# the float64 variant runs the identical computation without the log
# number system; at this scale it still works, but it dies once the
# population (and with it the total derivative order) grows
print("\nfloat64 coefficient backend:")
print("  same model         :", log_likelihood(mp, obs, backend="float"))
big = ModelParams.build(3, 0.5, "poisson", 0.5, "poisson", 400.0)
big_obs = Observations(simulate(big, 7).y)
print(f"  Poisson(400) model (total order {big_obs.total}):")
print(f"    LNS     : {log_likelihood(big, big_obs):.4f}")
try:
    log_likelihood(big, big_obs, backend="float")
except OverflowError as exc:
    print(f"    float64 : OVERFLOW ({exc})")
