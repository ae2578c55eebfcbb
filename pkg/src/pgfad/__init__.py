"""Exact inference and learning for integer hidden Markov models.

The package combines three layers:

* signed log-space scalars (:mod:`pgfad.lns`) and truncated Taylor series
  over them (:mod:`pgfad.series`), with fast power-series composition;
* high-order forward differentiation through nested derivative nodes
  (:mod:`pgfad.nested`) and forward-over-reverse gradients
  (:mod:`pgfad.tape`);
* the integer-HMM application: PGF-based likelihoods and gradients
  (:mod:`pgfad.model`), a truncated-forward oracle (:mod:`pgfad.trunc`),
  a simulator (:mod:`pgfad.sim`) and a maximum-likelihood fitter
  (:mod:`pgfad.fit`).
"""

from .lns import LogReal, isclose_log
from .series import (
    FloatOverflowError,
    PerturbationConfusionError,
    TaylorSeries,
    VarTag,
    compose_bk21,
    compose_dual,
    compose_naive,
    diff,
    exp,
    extract_derivative,
    lift_const,
    lift_var,
    log,
    power,
    recip,
)
from .nested import NestedNode, nested_diff
from .tape import Tape, TapeValue, backward, backward_nested, record_forward
from .model import (
    DistSpec,
    ModelParams,
    Observations,
    ZeroLikelihoodError,
    a_k,
    gamma_k,
    grad_log_likelihood,
    log_likelihood,
    loglik_and_grad,
    param_names,
    pgf_eval,
)
from .trunc import TruncConfig, adaptive_loglik, transition_row, truncated_loglik
from .sim import Trajectory, simulate, simulate_many
from .fit import FitProblem, FitResult, fit, numeric_gradient

__version__ = "0.1.0"
