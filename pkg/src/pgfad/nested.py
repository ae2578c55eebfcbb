"""Lifting of nested derivative nodes.

A nested derivative node evaluates ``phi(v, params) = d^q/dv^q g(v, params)``
where ``g`` is itself built from lifted operations (and may contain further
nested derivatives).  To propagate a series with respect to an outer
variable through such a node, a fresh inner variable is instantiated at the
combined order ``q + p``, ``g`` is evaluated on it, the result is shifted
down by ``q`` derivatives, and the shifted series is composed back onto the
incoming series.

The parameter bundle must not depend on the outer variable; this is
enforced by the tag checks, so a violation fails loudly at the offending
operation instead of silently mixing perturbations.
"""

from __future__ import annotations

import numbers
from contextlib import contextmanager
from dataclasses import dataclass, field

from .lns import LogReal
from .series import (
    PerturbationConfusionError,
    TaylorSeries,
    compose_dual,
    diff,
    lift_const,
    lift_var,
)

__all__ = ["NestedNode", "nested_diff", "record_inner_orders"]


@dataclass(frozen=True)
class NestedNode:
    """A q-th derivative of an evaluable ``g(v, params)`` in one variable."""

    g: object
    q: int
    params: tuple = field(default_factory=tuple)


# Optional log of (q, p, inner order) triples, for order-budget assertions.
_order_log: list | None = None


@contextmanager
def record_inner_orders():
    """Collect (label, q, p, inner_order) for every inner evaluation."""
    global _order_log
    prev = _order_log
    _order_log = [] if prev is None else prev
    try:
        yield _order_log
    finally:
        _order_log = prev


def _log_order(label, q, p, inner_order):
    if _order_log is not None:
        _order_log.append((label, q, p, inner_order))


def nested_diff(g, u, q: int, params=()):
    """Evaluate ``d^q/dv^q g(v, params)`` at ``v = u``, lifted through ``u``.

    ``u`` may be a plain scalar (an order-0 evaluation), a TaylorSeries
    with respect to some outer variable, or a taped value (in which case a
    nested node is recorded).  ``g`` receives the inner series and the
    parameter bundle and may itself call nested_diff recursively.
    """
    if q < 0:
        raise ValueError("derivative order must be >= 0")
    hook = getattr(type(u), "_nested_diff_hook", None)
    if hook is not None:
        return hook(u, g, q, tuple(params))
    return _series_nested_diff(g, u, q, tuple(params), label="fwd")


def _series_nested_diff(g, u, q, params, label="fwd"):
    if isinstance(u, TaylorSeries):
        p = u.order
        v0 = u.coeff(0)
        outer = u
        _check_params(params, u.tag)
    elif isinstance(u, (numbers.Real, LogReal)):
        p = 0
        v0 = u
        outer = None
    else:
        raise TypeError(f"cannot differentiate through {type(u).__name__}")

    inner = lift_var(v0, q + p)
    _log_order(label, q, p, q + p)
    y = g(inner, params)
    if isinstance(y, (numbers.Real, LogReal)):
        y = lift_const(y, q + p, inner.tag, kind=inner.kind)
    if not isinstance(y, TaylorSeries):
        raise TypeError(f"inner function returned {type(y).__name__}")
    if y.tag is not inner.tag:
        # a constant result w.r.t. the inner variable is legal only as a scalar
        raise PerturbationConfusionError(
            "inner function returned a series in a different variable"
        )
    if y.order != q + p:
        raise ValueError(
            f"inner evaluation returned order {y.order}, expected {q + p}"
        )
    w = diff(y, q)
    if outer is None:
        return w.coeff(0)
    return compose_dual(w, outer)


def _check_params(params, outer_tag):
    for pi in params:
        if isinstance(pi, TaylorSeries) and pi.tag is outer_tag:
            raise PerturbationConfusionError(
                "parameter bundle carries the outer variable's tag"
            )
