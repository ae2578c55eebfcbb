"""Forward-over-reverse differentiation with nested derivative nodes.

The forward pass runs the computation on series-valued operands while
recording every operation into a :class:`Tape`.  The reverse sweep then
walks the recorded graph backwards, accumulating series-valued adjoints;
for every parameter this yields the series of its gradient with respect to
the input variable, i.e. ``d/dtheta d^p/dx^p f(x, theta)`` after derivative
extraction.

A nested derivative node records its inner computation as a tape of its
own, at order ``q + p + 1``: one order beyond what the node's value needs.
During the reverse sweep the partial with respect to the node's argument
is then simply one more derivative of the recorded inner output, and the
partials with respect to the whole parameter bundle come from a single
reverse sweep over the recorded inner tape; nothing is re-run, so the
gradient costs a K-independent multiple of the forward evaluation no
matter how deeply the derivatives nest.
"""

from __future__ import annotations

import numbers
from contextlib import contextmanager
from dataclasses import dataclass, field

from .lns import LogReal
from . import nested as _nested
from .nested import NestedNode, PerturbationConfusionError
from .series import (
    TaylorSeries,
    compose_dual,
    diff,
    exp as _generic_exp,
    lift_const,
    lift_var,
    log as _generic_log,
    power as _generic_power,
    truncate,
    unit_series,
    zero_series,
)

__all__ = [
    "Tape",
    "TapeNode",
    "TapeValue",
    "record_forward",
    "backward",
    "backward_nested",
    "record_sweep_stats",
]


@dataclass
class TapeNode:
    kind: str  # input | parameter | add | mul | div | exp | log | pow | scale | nested
    preds: tuple
    primal: TaylorSeries
    aux: object = None
    depends_on_input: bool = False


@dataclass
class _NestedRecord:
    """aux payload of a nested node: the node spec plus its inner recording."""

    node: NestedNode
    inner_tape: "Tape"
    inner_out: "TapeValue"


class Tape:
    """Recorded operation graph in topological order."""

    def __init__(self, order: int, kind: str):
        self.order = order
        self.kind = kind
        self.tag = None
        self.nodes: list[TapeNode] = []
        self.input_index: int | None = None
        self.param_indices: list[int] = []
        self._const_cache: dict = {}

    def _push(self, kind, preds, primal, aux=None, depends=False) -> int:
        self.nodes.append(TapeNode(kind, tuple(preds), primal, aux, depends))
        return len(self.nodes) - 1

    def value(self, index: int) -> "TapeValue":
        return TapeValue(self, index)

    def const(self, c) -> int:
        """Promote a plain scalar to an (unregistered) parameter leaf."""
        key = c
        try:
            idx = self._const_cache.get(key)
        except TypeError:  # unhashable; should not happen for scalars
            idx = None
            key = None
        if idx is not None:
            return idx
        primal = lift_const(c, self.order, self.tag, kind=self.kind)
        idx = self._push("parameter", (), primal)
        if key is not None:
            self._const_cache[key] = idx
        return idx

    def __len__(self):
        return len(self.nodes)


class TapeValue:
    """Handle to one tape node; arithmetic on it records new nodes."""

    __slots__ = ("tape", "index")

    def __init__(self, tape: Tape, index: int):
        self.tape = tape
        self.index = index

    @property
    def node(self) -> TapeNode:
        return self.tape.nodes[self.index]

    @property
    def primal(self) -> TaylorSeries:
        return self.tape.nodes[self.index].primal

    def __repr__(self):
        return f"TapeValue(#{self.index}: {self.primal!r})"

    # -- recording helpers ---------------------------------------------------

    def _operand(self, other):
        """Other operand as a node index, promoting scalars to const leaves."""
        if isinstance(other, TapeValue):
            if other.tape is not self.tape:
                raise ValueError("cannot combine values from different tapes")
            return other.index
        if isinstance(other, (numbers.Real, LogReal)):
            return self.tape.const(other)
        return None

    def _binary(self, kind, i, j, primal):
        dep = self.tape.nodes[i].depends_on_input or self.tape.nodes[j].depends_on_input
        idx = self.tape._push(kind, (i, j), primal, depends=dep)
        return TapeValue(self.tape, idx)

    def _unary(self, kind, primal, aux=None):
        dep = self.node.depends_on_input
        idx = self.tape._push(kind, (self.index,), primal, aux=aux, depends=dep)
        return TapeValue(self.tape, idx)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        j = self._operand(other)
        if j is None:
            return NotImplemented
        t = self.tape
        return self._binary("add", self.index, j, self.primal + t.nodes[j].primal)

    __radd__ = __add__

    def __neg__(self):
        minus_one = -1.0 if self.tape.kind == "float" else -LogReal.one()
        return self._unary("scale", -self.primal, aux=minus_one)

    def __sub__(self, other):
        j = self._operand(other)
        if j is None:
            return NotImplemented
        return self + (-TapeValue(self.tape, j))

    def __rsub__(self, other):
        j = self._operand(other)
        if j is None:
            return NotImplemented
        return TapeValue(self.tape, j) + (-self)

    def __mul__(self, other):
        if isinstance(other, (numbers.Real, LogReal)):
            aux = other if self.tape.kind == "lns" else float(other)
            return self._unary("scale", self.primal * other, aux=aux)
        j = self._operand(other)
        if j is None:
            return NotImplemented
        t = self.tape
        return self._binary("mul", self.index, j, self.primal * t.nodes[j].primal)

    __rmul__ = __mul__

    def __truediv__(self, other):
        j = self._operand(other)
        if j is None:
            return NotImplemented
        t = self.tape
        return self._binary("div", self.index, j, self.primal / t.nodes[j].primal)

    def __rtruediv__(self, other):
        j = self._operand(other)
        if j is None:
            return NotImplemented
        return TapeValue(self.tape, j) / self

    def __pow__(self, a):
        a = float(a)
        return self._unary("pow", _generic_power(self.primal, a), aux=a)

    # -- elementary functions (registered on the generic dispatchers) -----

    def _exp(self):
        return self._unary("exp", _generic_exp(self.primal))

    def _log(self):
        return self._unary("log", _generic_log(self.primal))

    # -- nested derivative recording --------------------------------------

    def _nested_diff_hook(self, g, q, params):
        """Record a nested derivative node with its inner tape.

        The inner function is recorded once, at order q + p + 1: one order
        beyond what the node's value needs, so that the reverse sweep can
        read off both the (q+1)-th inner derivative (the partial with
        respect to the argument) and, via one reverse sweep of the inner
        tape, the partials with respect to the whole parameter bundle,
        without ever re-running the inner computation.
        """
        tape = self.tape
        pidx = []
        for pi in params:
            if isinstance(pi, TapeValue):
                if pi.tape is not tape:
                    raise ValueError("parameter bundle from a different tape")
                if pi.node.depends_on_input:
                    raise PerturbationConfusionError(
                        "nested-node parameter depends on the input variable"
                    )
                pidx.append(pi.index)
            elif isinstance(pi, (numbers.Real, LogReal)):
                pidx.append(tape.const(pi))
            else:
                raise TypeError(
                    f"unsupported parameter type {type(pi).__name__} on tape"
                )
        pi_scalars = tuple(tape.nodes[i].primal.coeff(0) for i in pidx)
        p = self.primal.order
        v0 = self.primal.coeff(0)
        inner_tape, inner_out = record_forward(
            g, v0, pi_scalars, q + p + 1, kind=self.primal.kind
        )
        _nested._log_order("rec", q, p, q + p + 1)
        w = truncate(diff(inner_out.primal, q), p)
        primal = compose_dual(w, self.primal)
        idx = tape._push(
            "nested",
            (self.index, *pidx),
            primal,
            aux=_NestedRecord(NestedNode(g, q, pi_scalars), inner_tape, inner_out),
            depends=self.node.depends_on_input,
        )
        return TapeValue(tape, idx)


_generic_exp.register(TapeValue)(TapeValue._exp)
_generic_log.register(TapeValue)(TapeValue._log)
_generic_power.register(TapeValue)(lambda v, a: v ** a)


# --------------------------------------------------------------------------
# forward recording and the reverse sweep
# --------------------------------------------------------------------------


def record_forward(f, x, theta, p: int, kind: str | None = None):
    """Run ``f(x, theta)`` on taped series values and record the graph.

    ``x`` is the input scalar (lifted to (x, 1, 0, ..., 0) at order ``p``);
    ``theta`` is a sequence of parameter scalars, promoted to constant
    series and registered so the reverse sweep reports their gradients.
    Returns ``(tape, output TapeValue)``; the forward value is identical to
    a tape-free evaluation of ``f``.
    """
    if kind is None:
        kind = "lns" if isinstance(x, LogReal) else "float"
    tape = Tape(p, kind)
    xs = lift_var(x, p, kind=kind)
    tape.tag = xs.tag
    tape.input_index = tape._push("input", (), xs, depends=True)
    theta_vals = []
    for th in theta:
        primal = lift_const(th, p, tape.tag, kind=kind)
        idx = tape._push("parameter", (), primal)
        tape.param_indices.append(idx)
        theta_vals.append(TapeValue(tape, idx))
    out = f(TapeValue(tape, tape.input_index), tuple(theta_vals))
    if isinstance(out, (numbers.Real, LogReal)):
        out = TapeValue(tape, tape.const(out))
    if not isinstance(out, TapeValue):
        raise TypeError(f"recorded function returned {type(out).__name__}")
    return tape, out


_sweep_log: list | None = None


@contextmanager
def record_sweep_stats():
    """Collect per-sweep dicts with edge/partial-evaluation counts."""
    global _sweep_log
    prev = _sweep_log
    _sweep_log = [] if prev is None else prev
    try:
        yield _sweep_log
    finally:
        _sweep_log = prev


def backward(tape: Tape, out) -> list[TaylorSeries]:
    """Reverse sweep; returns one gradient series per registered parameter.

    Adjoints are series with the input's tag and order; they start at zero
    except for the output node, which starts at the unit series.  Each
    node's local partials are evaluated exactly once per predecessor edge,
    in reverse topological index order, so results are reproducible.
    """
    out_index = out.index if isinstance(out, TapeValue) else int(out)
    p, tag, kind = tape.order, tape.tag, tape.kind
    zero = zero_series(p, tag, kind)
    adj = [zero] * len(tape.nodes)
    adj[out_index] = unit_series(p, tag, kind)
    edges = 0
    for j in range(len(tape.nodes) - 1, -1, -1):
        node = tape.nodes[j]
        if not node.preds:
            continue
        vbar = adj[j]
        for i, contrib in _local_partials(tape, j, vbar):
            adj[i] = adj[i] + contrib
            edges += 1
    if _sweep_log is not None:
        _sweep_log.append(
            {
                "nodes": len(tape.nodes),
                "edges": sum(len(n.preds) for n in tape.nodes),
                "partial_evals": edges,
            }
        )
    return [adj[i] for i in tape.param_indices]


def _local_partials(tape: Tape, j: int, vbar: TaylorSeries):
    """(pred index, adjoint contribution) pairs for node j."""
    node = tape.nodes[j]
    kind = node.kind
    nodes = tape.nodes
    if kind == "add":
        a, b = node.preds
        return [(a, vbar), (b, vbar)]
    if kind == "scale":
        (a,) = node.preds
        return [(a, vbar * node.aux)]
    if kind == "mul":
        a, b = node.preds
        return [(a, vbar * nodes[b].primal), (b, vbar * nodes[a].primal)]
    if kind == "div":
        a, b = node.preds
        da = vbar / nodes[b].primal
        return [(a, da), (b, -(da * node.primal))]
    if kind == "exp":
        (a,) = node.preds
        return [(a, vbar * node.primal)]
    if kind == "log":
        (a,) = node.preds
        return [(a, vbar / nodes[a].primal)]
    if kind == "pow":
        (a,) = node.preds
        r = node.aux
        if r == 0.0:
            return [(a, zero_series(tape.order, tape.tag, tape.kind))]
        partial = _generic_power(nodes[a].primal, r - 1.0) * r
        return [(a, vbar * partial)]
    if kind == "nested":
        return backward_nested(tape, j, vbar)
    raise AssertionError(f"unknown op kind {kind!r}")


def backward_nested(tape: Tape, j: int, vbar: TaylorSeries):
    """Adjoint contributions of one nested derivative node.

    Everything is read off the inner tape recorded at order q+p+1 during
    the forward pass.  The partial with respect to the node's argument is
    the (q+1)-th inner derivative of the recorded output; the partials with
    respect to the parameter bundle come from one reverse sweep of the
    inner tape (recursing through deeper nested nodes the same way), each
    shifted down by q derivatives, reduced to order p and composed back
    onto the argument's series.  No inner forward is ever re-run.
    """
    node = tape.nodes[j]
    rec: _NestedRecord = node.aux
    u_idx = node.preds[0]
    pi_idx = node.preds[1:]
    u_primal = tape.nodes[u_idx].primal
    p = u_primal.order
    q = rec.node.q

    contribs = []
    dv_w = diff(rec.inner_out.primal, q + 1)  # order (q+p+1) - (q+1) = p
    dv = compose_dual(dv_w, u_primal)
    contribs.append((u_idx, vbar * dv))

    if pi_idx:
        inner_grads = backward(rec.inner_tape, rec.inner_out)
        for i, grad in zip(pi_idx, inner_grads):
            if grad._c.is_all_zero():
                # parameter unused inside g: its partial is exactly zero, so
                # the diff/compose post-processing can be skipped outright
                contribs.append((i, zero_series(p, vbar.tag, vbar.kind)))
                continue
            w = truncate(diff(grad, q), p)
            dpi = compose_dual(w, u_primal)
            contribs.append((i, vbar * dpi))
    return contribs
