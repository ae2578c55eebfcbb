"""Integer hidden Markov models driven by probability generating functions.

The latent population evolves by per-individual offspring counts plus
immigration, and is observed through binomial thinning.  Marginalizing the
unbounded counts is done by evaluating recursively defined PGFs: the
prediction step composes the previous evidence PGF with the offspring PGF
and multiplies by the immigration PGF; the evidence step takes the y_k-th
derivative of the prediction PGF, which is where the nested high-order
differentiation machinery comes in.  The likelihood of the whole
observation sequence is the final PGF evaluated at 1, carried in the LNS
scalar kind so that enormous derivative magnitudes stay representable.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .lns import LogReal
from .nested import nested_diff
from .series import FloatOverflowError, TaylorSeries, exp
from .tape import TapeValue, backward, record_forward

__all__ = [
    "DistSpec",
    "ModelParams",
    "Observations",
    "ZeroLikelihoodError",
    "pgf_eval",
    "gamma_k",
    "a_k",
    "log_likelihood",
    "grad_log_likelihood",
    "loglik_and_grad",
    "param_names",
]

_FAMILIES = ("bernoulli", "poisson", "geometric")


class ZeroLikelihoodError(ArithmeticError):
    """The likelihood is structurally zero, so its gradient is undefined."""


@dataclass(frozen=True)
class DistSpec:
    """A count distribution given by its PGF family and one parameter."""

    family: str
    param: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        p = self.param
        if self.family in ("bernoulli", "geometric"):
            if not 0.0 < p < 1.0:
                raise ValueError(f"{self.family} parameter must be in (0, 1), got {p}")
        else:
            if not p > 0.0:
                raise ValueError(f"poisson parameter must be positive, got {p}")

    @property
    def mean(self) -> float:
        if self.family == "bernoulli":
            return self.param
        if self.family == "poisson":
            return self.param
        return (1.0 - self.param) / self.param  # geometric on 0, 1, 2, ...


@dataclass(frozen=True)
class ModelParams:
    """Per-step detection probabilities plus offspring/immigration PGFs."""

    rho: tuple
    offspring: tuple
    immigration: tuple

    def __post_init__(self):
        K = len(self.rho)
        if not (len(self.offspring) == len(self.immigration) == K):
            raise ValueError("rho, offspring and immigration must share a length")
        if K < 1:
            raise ValueError("need at least one time step")
        for r in self.rho:
            if not 0.0 < r < 1.0:
                raise ValueError(f"detection probability must be in (0, 1), got {r}")

    @property
    def K(self) -> int:
        return len(self.rho)

    @classmethod
    def build(cls, K, rho, offspring_family, offspring_param,
              immigration_family, immigration_param) -> "ModelParams":
        """Broadcast scalar or length-K parameter values to a full model."""
        def expand(v):
            if isinstance(v, numbers.Real):
                return (float(v),) * K
            v = tuple(float(x) for x in v)
            if len(v) != K:
                raise ValueError(f"expected a scalar or {K} values, got {len(v)}")
            return v

        return cls(
            rho=expand(rho),
            offspring=tuple(DistSpec(offspring_family, p) for p in expand(offspring_param)),
            immigration=tuple(DistSpec(immigration_family, p) for p in expand(immigration_param)),
        )

    def flat(self) -> np.ndarray:
        """Parameter vector (rho_1..K, delta_1..K, lambda_1..K)."""
        return np.array(
            [*self.rho]
            + [d.param for d in self.offspring]
            + [d.param for d in self.immigration]
        )

    def with_flat(self, vec) -> "ModelParams":
        K = self.K
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (3 * K,):
            raise ValueError(f"expected {3 * K} parameter values")
        return ModelParams(
            rho=tuple(vec[:K]),
            offspring=tuple(
                DistSpec(d.family, p) for d, p in zip(self.offspring, vec[K:2 * K])
            ),
            immigration=tuple(
                DistSpec(d.family, p) for d, p in zip(self.immigration, vec[2 * K:])
            ),
        )


def param_names(K: int) -> list[str]:
    return (
        [f"rho[{k}]" for k in range(1, K + 1)]
        + [f"delta[{k}]" for k in range(1, K + 1)]
        + [f"lambda[{k}]" for k in range(1, K + 1)]
    )


@dataclass(frozen=True)
class Observations:
    """Observed counts y_1..y_K (nonnegative integers)."""

    y: tuple

    def __post_init__(self):
        for v in self.y:
            if not (isinstance(v, numbers.Integral) and v >= 0):
                raise ValueError(f"observations must be nonnegative integers, got {v!r}")
        object.__setattr__(self, "y", tuple(int(v) for v in self.y))

    @property
    def K(self) -> int:
        return len(self.y)

    @property
    def total(self) -> int:
        """Total differentiation order d = sum of the observed counts."""
        return sum(self.y)


# --------------------------------------------------------------------------
# generic evaluation core: values may be scalars, series, or taped values
# --------------------------------------------------------------------------


class _Theta:
    """Parameter values in whatever arithmetic the evaluation runs over."""

    __slots__ = ("kind", "rho", "delta", "lam")

    def __init__(self, kind, rho, delta, lam):
        self.kind = kind
        self.rho = tuple(rho)
        self.delta = tuple(delta)
        self.lam = tuple(lam)

    @property
    def one(self):
        return LogReal.one() if self.kind == "lns" else 1.0

    def from_log(self, ell):
        """A positive constant given by its natural log."""
        if self.kind == "lns":
            return LogReal.from_log(ell)
        return math.exp(ell)

    def flat(self):
        return self.rho + self.delta + self.lam

    @classmethod
    def unflatten(cls, kind, values, K):
        values = tuple(values)
        return cls(kind, values[:K], values[K:2 * K], values[2 * K:])


def _value_kind(v) -> str:
    if isinstance(v, TapeValue):
        return v.tape.kind
    if isinstance(v, TaylorSeries):
        return v.kind
    if isinstance(v, LogReal):
        return "lns"
    if isinstance(v, numbers.Real):
        return "float"
    raise TypeError(f"unsupported value type {type(v).__name__}")


def _linear_value(v) -> float:
    if isinstance(v, TapeValue):
        v = v.primal
    if isinstance(v, TaylorSeries):
        v = v.coeff(0)
    if isinstance(v, LogReal):
        return v.to_real()
    return float(v)


def _theta_from(params: ModelParams, kind: str) -> _Theta:
    conv = LogReal.from_real if kind == "lns" else float
    return _Theta(
        kind,
        [conv(r) for r in params.rho],
        [conv(d.param) for d in params.offspring],
        [conv(d.param) for d in params.immigration],
    )


def _pgf_apply(family: str, param, u):
    if family == "bernoulli":
        return (1 - param) + (param * u)
    if family == "poisson":
        return exp(param * (u - 1))
    if family == "geometric":
        w = (1 - param) * u
        if abs(_linear_value(w)) >= 1.0:
            raise ValueError("geometric PGF evaluated outside |(1-p)u| < 1")
        return param / (1 - w)
    raise ValueError(f"unknown family {family!r}")


def _gamma_val(u, k, th: _Theta, mp: ModelParams, ys):
    f_u = _pgf_apply(mp.offspring[k - 1].family, th.delta[k - 1], u)
    g_u = _pgf_apply(mp.immigration[k - 1].family, th.lam[k - 1], u)
    return _a_val(f_u, k - 1, th, mp, ys) * g_u


def _a_val(s, k, th: _Theta, mp: ModelParams, ys):
    if k == 0:
        return th.one
    y = ys[k - 1]
    rho = th.rho[k - 1]
    inv_fact = th.from_log(-float(gammaln(y + 1)))
    arg = s * (1 - rho)
    K = mp.K

    def g(u, pi):
        return _gamma_val(u, k, _Theta.unflatten(th.kind, pi, K), mp, ys)

    deriv = nested_diff(g, arg, y, th.flat())
    return (s ** y) * (rho ** y) * inv_fact * deriv


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------


def pgf_eval(spec: DistSpec, u):
    """Evaluate a family's PGF on a scalar, series, or taped value."""
    kind = _value_kind(u)
    param = LogReal.from_real(spec.param) if kind == "lns" else float(spec.param)
    return _pgf_apply(spec.family, param, u)


def gamma_k(u, k: int, params: ModelParams, obs: Observations):
    """The prediction-step PGF at step k (k = 1..K)."""
    if not 1 <= k <= params.K:
        raise ValueError(f"k must be in 1..{params.K}")
    th = _theta_from(params, _value_kind(u))
    return _gamma_val(u, k, th, params, obs.y)


def a_k(s, k: int, params: ModelParams, obs: Observations):
    """The evidence-step PGF at step k (k = 0..K, with the k = 0 base case 1)."""
    if not 0 <= k <= params.K:
        raise ValueError(f"k must be in 0..{params.K}")
    th = _theta_from(params, _value_kind(s))
    return _a_val(s, k, th, params, obs.y)


def log_likelihood(params: ModelParams, obs: Observations, backend: str = "lns") -> float:
    """ln p(y_1..y_K) computed exactly through the PGF recursion.

    The default backend carries every coefficient in the logarithmic number
    system; ``backend="float"`` runs the identical computation on plain
    float64 coefficients (useful for stability comparisons; it raises
    FloatOverflowError once values leave the representable range).
    A structurally zero likelihood is reported as ``-inf``.
    """
    if obs.K != params.K:
        raise ValueError("observation length does not match the model")
    th = _theta_from(params, "lns" if backend == "lns" else "float")
    a = _a_val(th.one, params.K, th, params, obs.y)
    # a computed negative value means the true (positive) likelihood sits
    # below the cancellation noise of the evaluation: indistinguishable
    # from a structural zero, so it is reported the same way
    if isinstance(a, LogReal):
        if a.sign <= 0:
            return -math.inf
        return a.logmag
    a = float(a)
    if not math.isfinite(a):
        raise FloatOverflowError("non-finite likelihood in float64 mode")
    if a <= 0.0:
        return -math.inf
    return math.log(a)


def loglik_and_grad(params: ModelParams, obs: Observations):
    """One taped evaluation returning (log-likelihood, gradient vector).

    The gradient is with respect to the flat parameter vector
    (rho_1..K, delta_1..K, lambda_1..K); the gradient of the log is the
    likelihood's gradient divided by its value, both in LNS.
    """
    if obs.K != params.K:
        raise ValueError("observation length does not match the model")
    K = params.K
    theta = _theta_from(params, "lns").flat()

    def f(x, theta_vals):
        th = _Theta.unflatten("lns", theta_vals, K)
        return _a_val(x, K, th, params, obs.y)

    tape, out = record_forward(f, LogReal.one(), theta, p=0, kind="lns")
    a = out.primal.coeff(0)
    if a.sign <= 0:
        # zero, or negative = below cancellation noise: either way there is
        # no usable likelihood value to divide the gradient by
        raise ZeroLikelihoodError("zero likelihood: gradient undefined")
    grads = backward(tape, out)
    vec = np.array([(g.coeff(0) / a).to_real() for g in grads])
    return a.logmag, vec


def grad_log_likelihood(params: ModelParams, obs: Observations) -> np.ndarray:
    """Exact gradient of the log-likelihood for every rho_k, delta_k, lambda_k."""
    return loglik_and_grad(params, obs)[1]
