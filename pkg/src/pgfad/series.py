"""Truncated Taylor series tagged by their variable of differentiation.

A :class:`TaylorSeries` holds the coefficients ``t_i = f^(i)(x0) / i!`` of
one intermediate quantity with respect to one tagged variable, up to a
fixed order.  It is the "generalized dual number" that forward-mode
differentiation propagates: arithmetic and the elementary functions are
lifted coefficient-wise (O(p^2) recurrences), and two series can be
composed to re-express a quantity in terms of an earlier variable.

Coefficients are stored either as plain float64 (fast, but overflows once
factorial-sized values appear) or in the logarithmic number system as
sign/log-magnitude pairs (see :mod:`pgfad.lns`), which survives orders in
the thousands.  The same computation can be run over either scalar kind.

Every series carries a :class:`VarTag`; combining series with different
tags raises :class:`PerturbationConfusionError` rather than silently mixing
derivative information of distinct variables.
"""

from __future__ import annotations

import functools
import itertools
import math
import numbers

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .lns import LogReal

__all__ = [
    "VarTag",
    "TaylorSeries",
    "PerturbationConfusionError",
    "FloatOverflowError",
    "lift_var",
    "lift_const",
    "diff",
    "extract_derivative",
    "compose_naive",
    "compose_bk21",
    "compose_dual",
    "exp",
    "log",
    "power",
    "recip",
]


class PerturbationConfusionError(ValueError):
    """Derivative information of two different variables was about to mix."""


class FloatOverflowError(OverflowError):
    """A float64 coefficient became non-finite (the LNS backend avoids this)."""


_tag_counter = itertools.count(1)  # next() is atomic under the GIL


class VarTag:
    """Identity of a variable of differentiation; fresh per lifted variable."""

    __slots__ = ("id",)

    def __init__(self):
        self.id = next(_tag_counter)

    def __repr__(self):
        return f"VarTag({self.id})"


# --------------------------------------------------------------------------
# coefficient storage backends
# --------------------------------------------------------------------------


class _F64Coeffs:
    """Plain float64 coefficients. Raises FloatOverflowError on inf/NaN."""

    __slots__ = ("a",)
    kind = "float"

    def __init__(self, a, check=True):
        self.a = np.asarray(a, dtype=np.float64)
        if check and not np.all(np.isfinite(self.a)):
            raise FloatOverflowError("non-finite float64 series coefficient")

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), check=False)

    @classmethod
    def from_scalars(cls, values):
        return cls(np.array([float(v) for v in values]))

    @property
    def n(self):
        return self.a.shape[0]

    def get(self, i):
        return float(self.a[i])

    def tolist(self):
        return [float(v) for v in self.a]

    def is_zero_at(self, i):
        return self.a[i] == 0.0

    def is_all_zero(self):
        return not self.a.any()

    def truncated(self, n):
        return _F64Coeffs(self.a[:n], check=False)

    def with_coeff(self, i, value):
        a = self.a.copy()
        a[i] = float(value)
        return _F64Coeffs(a)

    def neg(self):
        return _F64Coeffs(-self.a, check=False)

    def add(self, o):
        return _F64Coeffs(self.a + o.a)

    def sub(self, o):
        return _F64Coeffs(self.a - o.a)

    def scale(self, c):
        return _F64Coeffs(self.a * float(c))

    def mul(self, o, nout):
        return _F64Coeffs(np.convolve(self.a, o.a)[:nout])

    def div(self, o):
        return _F64Coeffs(_kernels.f64_div(self.a, o.a))

    def exp(self):
        return _F64Coeffs(_kernels.f64_exp(self.a))

    def log(self):
        return _F64Coeffs(_kernels.f64_log(self.a))

    def powr(self, alpha):
        return _F64Coeffs(_kernels.f64_pow(self.a, float(alpha)))

    @staticmethod
    def stack_rows(rows):
        return np.vstack([r.a for r in rows])

    @staticmethod
    def linear_comb(stacked, weights):
        return _F64Coeffs(np.asarray(weights, dtype=np.float64) @ stacked)

    def comb_with_coeffs(self, stacked, lo, hi):
        """Linear combination of stacked rows weighted by own coeffs lo:hi."""
        w = self.a[lo:hi]
        rows = stacked[: w.shape[0]]
        return _F64Coeffs(w @ rows)

    def diff_shift(self, q):
        p = self.n - q
        j = np.arange(p, dtype=np.float64)
        with np.errstate(over="ignore"):  # overflow is caught by the check
            factors = np.exp(gammaln(q + j + 1.0) - gammaln(j + 1.0))
            out = self.a[q:] * factors
        return _F64Coeffs(out)

    def extract(self, q):
        v = self.a[q] * math.exp(gammaln(q + 1.0))
        if not math.isfinite(v):
            raise FloatOverflowError("factorial overflow extracting derivative")
        return v


class _LnsCoeffs:
    """Sign/log-magnitude coefficient vectors over the LNS kernels."""

    __slots__ = ("s", "l")
    kind = "lns"

    def __init__(self, s, l, check=True):
        # construction paths keep zeros canonical (sign 0, log -inf), so the
        # only runtime hazards are an overflowed or NaN log magnitude; one
        # max-reduction detects both (numpy max propagates NaN)
        s = np.asarray(s, dtype=np.int8)
        l = np.asarray(l, dtype=np.float64)
        if check and l.size:
            m = float(l.max())
            if m != m:
                raise ArithmeticError("NaN log magnitude in series coefficients")
            if m == np.inf:
                raise OverflowError("log magnitude overflow in series coefficients")
        self.s = s
        self.l = l

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n, dtype=np.int8), np.full(n, -np.inf), check=False)

    @classmethod
    def from_scalars(cls, values):
        vals = [v if isinstance(v, LogReal) else LogReal.from_real(v) for v in values]
        s = np.array([v.sign for v in vals], dtype=np.int8)
        l = np.array([v.logmag if v.sign else -np.inf for v in vals])
        return cls(s, l, check=False)

    @property
    def n(self):
        return self.s.shape[0]

    def get(self, i):
        if self.s[i] == 0:
            return LogReal.zero()
        return LogReal(int(self.s[i]), float(self.l[i]))

    def tolist(self):
        return [self.get(i) for i in range(self.n)]

    def is_zero_at(self, i):
        return self.s[i] == 0

    def is_all_zero(self):
        return not self.s.any()

    def truncated(self, n):
        return _LnsCoeffs(self.s[:n], self.l[:n], check=False)

    def with_coeff(self, i, value):
        value = value if isinstance(value, LogReal) else LogReal.from_real(value)
        s = self.s.copy()
        l = self.l.copy()
        s[i] = value.sign
        l[i] = value.logmag if value.sign else -np.inf
        return _LnsCoeffs(s, l, check=False)

    def neg(self):
        return _LnsCoeffs(-self.s, self.l, check=False)

    def add(self, o):
        return _LnsCoeffs(*_kernels.lns_add_vec(self.s, self.l, o.s, o.l))

    def sub(self, o):
        return _LnsCoeffs(*_kernels.lns_add_vec(self.s, self.l, -o.s, o.l))

    def scale(self, c):
        if c.sign == 0:
            return _LnsCoeffs.zeros(self.n)
        return _LnsCoeffs(self.s * c.sign, self.l + c.logmag)

    def mul(self, o, nout):
        return _LnsCoeffs(*_kernels.lns_cauchy(self.s, self.l, o.s, o.l, nout))

    def div(self, o):
        return _LnsCoeffs(*_kernels.lns_div(self.s, self.l, o.s, o.l))

    def exp(self):
        return _LnsCoeffs(*_kernels.lns_exp(self.s, self.l))

    def log(self):
        return _LnsCoeffs(*_kernels.lns_log(self.s, self.l))

    def powr(self, alpha):
        return _LnsCoeffs(*_kernels.lns_pow(self.s, self.l, float(alpha)))

    @staticmethod
    def stack_rows(rows):
        return (
            np.vstack([r.s for r in rows]),
            np.vstack([r.l for r in rows]),
        )

    @staticmethod
    def linear_comb(stacked, weights):
        svec = np.array([w.sign for w in weights], dtype=np.int8)
        lvec = np.array([w.logmag if w.sign else -np.inf for w in weights])
        return _LnsCoeffs(*_kernels.lns_linear_comb(stacked[0], stacked[1], svec, lvec))

    def comb_with_coeffs(self, stacked, lo, hi):
        """Linear combination of stacked rows weighted by own coeffs lo:hi."""
        n = hi - lo
        return _LnsCoeffs(
            *_kernels.lns_linear_comb(
                stacked[0][:n], stacked[1][:n], self.s[lo:hi], self.l[lo:hi]
            )
        )

    def diff_shift(self, q):
        p = self.n - q
        j = np.arange(p, dtype=np.float64)
        factors = gammaln(q + j + 1.0) - gammaln(j + 1.0)
        return _LnsCoeffs(self.s[q:], self.l[q:] + factors)

    def extract(self, q):
        if self.s[q] == 0:
            return LogReal.zero()
        return LogReal(int(self.s[q]), float(self.l[q] + gammaln(q + 1.0)))


def _promote_scalar(c, kind):
    """Convert a plain scalar to the backend scalar of the given kind."""
    if kind == "lns":
        if isinstance(c, LogReal):
            return c
        if isinstance(c, numbers.Real):
            return LogReal.from_real(float(c))
        raise TypeError(f"cannot use {type(c).__name__} with LNS coefficients")
    if isinstance(c, LogReal):
        raise TypeError("cannot mix LogReal scalars into a float64 series")
    if isinstance(c, numbers.Real):
        return float(c)
    raise TypeError(f"cannot use {type(c).__name__} with float64 coefficients")


def _scalar_is_zero(c):
    if isinstance(c, LogReal):
        return c.sign == 0
    return c == 0.0


_BACKENDS = {"lns": _LnsCoeffs, "float": _F64Coeffs}


# --------------------------------------------------------------------------
# the series type
# --------------------------------------------------------------------------


class TaylorSeries:
    """Immutable truncated Taylor coefficients of one value w.r.t. one tag."""

    __slots__ = ("tag", "_c")

    def __init__(self, tag: VarTag, coeffs):
        self.tag = tag
        self._c = coeffs

    @property
    def order(self) -> int:
        return self._c.n - 1

    @property
    def kind(self) -> str:
        return self._c.kind

    def coeff(self, i):
        """The i-th Taylor coefficient (a LogReal or a float)."""
        if not 0 <= i <= self.order:
            raise ValueError(f"coefficient index {i} out of range 0..{self.order}")
        return self._c.get(i)

    def coeffs(self):
        return self._c.tolist()

    def __len__(self):
        return self._c.n

    def __repr__(self):
        vals = ", ".join(str(v) for v in self._c.tolist()[:6])
        more = ", ..." if self.order > 5 else ""
        return f"TaylorSeries[{self.kind}](tag={self.tag.id}, [{vals}{more}])"

    # -- binary-op plumbing -------------------------------------------------

    def _match(self, other):
        """Return the other operand as a backend, or a promoted constant."""
        if isinstance(other, TaylorSeries):
            if other.tag is not self.tag:
                raise PerturbationConfusionError(
                    f"series tagged {self.tag!r} combined with {other.tag!r}"
                )
            if other.order != self.order:
                raise ValueError(
                    f"series orders differ: {self.order} vs {other.order}"
                )
            if other.kind != self.kind:
                raise TypeError("cannot mix LNS and float64 series")
            return other._c
        return None

    def _const_like(self, c):
        be = _BACKENDS[self.kind]
        out = be.zeros(self._c.n)
        return out.with_coeff(0, _promote_scalar(c, self.kind))

    def __add__(self, other):
        oc = self._match(other)
        if oc is None:
            if not isinstance(other, (numbers.Real, LogReal)):
                return NotImplemented
            oc = self._const_like(other)
        return TaylorSeries(self.tag, self._c.add(oc))

    __radd__ = __add__

    def __sub__(self, other):
        oc = self._match(other)
        if oc is None:
            if not isinstance(other, (numbers.Real, LogReal)):
                return NotImplemented
            oc = self._const_like(other)
        return TaylorSeries(self.tag, self._c.sub(oc))

    def __rsub__(self, other):
        if not isinstance(other, (numbers.Real, LogReal)):
            return NotImplemented
        return TaylorSeries(self.tag, self._const_like(other).sub(self._c))

    def __neg__(self):
        return TaylorSeries(self.tag, self._c.neg())

    def __mul__(self, other):
        oc = self._match(other)
        if oc is None:
            if not isinstance(other, (numbers.Real, LogReal)):
                return NotImplemented
            c = _promote_scalar(other, self.kind)
            if _scalar_is_zero(c):
                return TaylorSeries(self.tag, _BACKENDS[self.kind].zeros(self._c.n))
            return TaylorSeries(self.tag, self._c.scale(c))
        return TaylorSeries(self.tag, self._c.mul(oc, self._c.n))

    __rmul__ = __mul__

    def __truediv__(self, other):
        oc = self._match(other)
        if oc is None:
            if not isinstance(other, (numbers.Real, LogReal)):
                return NotImplemented
            c = _promote_scalar(other, self.kind)
            if _scalar_is_zero(c):
                raise ZeroDivisionError("series divided by zero scalar")
            if self.kind == "lns":
                return TaylorSeries(self.tag, self._c.scale(LogReal.one() / c))
            return TaylorSeries(self.tag, self._c.scale(1.0 / c))
        if oc.is_zero_at(0):
            raise ZeroDivisionError("series division by a zero constant term")
        return TaylorSeries(self.tag, self._c.div(oc))

    def __rtruediv__(self, other):
        if not isinstance(other, (numbers.Real, LogReal)):
            return NotImplemented
        num = TaylorSeries(self.tag, self._const_like(other))
        return num / self

    def __pow__(self, a):
        return power(self, a)


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------


def _kind_of_scalar(x):
    if isinstance(x, LogReal):
        return "lns"
    if isinstance(x, numbers.Real):
        return "float"
    raise TypeError(f"not a scalar: {type(x).__name__}")


def lift_var(x, p: int, kind: str | None = None) -> TaylorSeries:
    """A fresh variable of differentiation: coefficients (x, 1, 0, ..., 0)."""
    if p < 0:
        raise ValueError("order must be >= 0")
    kind = kind or _kind_of_scalar(x)
    be = _BACKENDS[kind]
    c = be.zeros(p + 1).with_coeff(0, _promote_scalar(x, kind))
    if p >= 1:
        one = LogReal.one() if kind == "lns" else 1.0
        c = c.with_coeff(1, one)
    return TaylorSeries(VarTag(), c)


def lift_const(c, p: int, tag: VarTag, kind: str | None = None) -> TaylorSeries:
    """A constant promoted to a series under an existing tag: (c, 0, ..., 0)."""
    if p < 0:
        raise ValueError("order must be >= 0")
    kind = kind or _kind_of_scalar(c)
    be = _BACKENDS[kind]
    return TaylorSeries(tag, be.zeros(p + 1).with_coeff(0, _promote_scalar(c, kind)))


def unit_series(p: int, tag: VarTag, kind: str) -> TaylorSeries:
    one = LogReal.one() if kind == "lns" else 1.0
    return lift_const(one, p, tag, kind)


def zero_series(p: int, tag: VarTag, kind: str) -> TaylorSeries:
    return TaylorSeries(tag, _BACKENDS[kind].zeros(p + 1))


# --------------------------------------------------------------------------
# generic elementary functions (registered for more types elsewhere)
# --------------------------------------------------------------------------


@functools.singledispatch
def exp(x):
    raise TypeError(f"exp not supported for {type(x).__name__}")


@exp.register(numbers.Real)
def _(x):
    return math.exp(x)


@exp.register(LogReal)
def _(x):
    return x.exp()


@exp.register(TaylorSeries)
def _(x):
    return TaylorSeries(x.tag, x._c.exp())


@functools.singledispatch
def log(x):
    raise TypeError(f"log not supported for {type(x).__name__}")


@log.register(numbers.Real)
def _(x):
    return math.log(x)


@log.register(LogReal)
def _(x):
    return x.log()


@log.register(TaylorSeries)
def _(x):
    c0 = x.coeff(0)
    positive = c0.sign > 0 if isinstance(c0, LogReal) else c0 > 0
    if not positive:
        raise ValueError("series log needs a positive constant term")
    return TaylorSeries(x.tag, x._c.log())


@functools.singledispatch
def power(x, a):
    raise TypeError(f"power not supported for {type(x).__name__}")


@power.register(numbers.Real)
def _(x, a):
    return float(x) ** a


@power.register(LogReal)
def _(x, a):
    return x ** a


@power.register(TaylorSeries)
def _(x, a):
    a = float(a)
    integral = a == round(a)
    c0 = x.coeff(0)
    c0_zero = c0.sign == 0 if isinstance(c0, LogReal) else c0 == 0.0
    c0_neg = c0.sign < 0 if isinstance(c0, LogReal) else c0 < 0.0
    if c0_zero:
        if not integral or a < 0:
            raise ZeroDivisionError(
                "series power with zero constant term needs a nonnegative "
                "integer exponent"
            )
        return _pow_int_squaring(x, int(round(a)))
    if c0_neg and not integral:
        raise ValueError("negative constant term with fractional exponent")
    return TaylorSeries(x.tag, x._c.powr(a))


def _pow_int_squaring(x: TaylorSeries, n: int) -> TaylorSeries:
    out = unit_series(x.order, x.tag, x.kind)
    base = x
    while n > 0:
        if n & 1:
            out = out * base
        n >>= 1
        if n:
            base = base * base
    return out


def recip(r: TaylorSeries) -> TaylorSeries:
    """Series reciprocal 1/r; the constant term must be nonzero."""
    return unit_series(r.order, r.tag, r.kind) / r


def div(t: TaylorSeries, r: TaylorSeries) -> TaylorSeries:
    return t / r


# --------------------------------------------------------------------------
# derivative shift and extraction
# --------------------------------------------------------------------------


def truncate(s: TaylorSeries, order: int) -> TaylorSeries:
    """Drop coefficients above the given order (a valid series remains)."""
    if order >= s.order:
        return s
    if order < 0:
        raise ValueError("order must be >= 0")
    return TaylorSeries(s.tag, s._c.truncated(order + 1))


def diff(y: TaylorSeries, q: int) -> TaylorSeries:
    """Drop to the q-th derivative: shift coefficients left by q positions.

    Stored values are Taylor coefficients, so the shift carries a factor
    (q+j)!/j! (applied in log space for LNS scalars).  The result keeps
    y's tag and has order ``y.order - q``.
    """
    if q < 0:
        raise ValueError("derivative order must be >= 0")
    if q > y.order:
        raise ValueError(f"cannot take {q} derivatives of an order-{y.order} series")
    if q == 0:
        return y
    return TaylorSeries(y.tag, y._c.diff_shift(q))


def extract_derivative(s: TaylorSeries, q: int):
    """The raw q-th derivative: q! times the q-th Taylor coefficient."""
    if not 0 <= q <= s.order:
        raise ValueError(f"derivative index {q} out of range 0..{s.order}")
    return s._c.extract(q)


# --------------------------------------------------------------------------
# power series composition
# --------------------------------------------------------------------------


def _check_compose_args(Q: TaylorSeries, R: TaylorSeries):
    if not isinstance(Q, TaylorSeries) or not isinstance(R, TaylorSeries):
        raise TypeError("compose expects two TaylorSeries")
    if Q.order != R.order:
        raise ValueError(f"series orders differ: {Q.order} vs {R.order}")
    if Q.kind != R.kind:
        raise TypeError("cannot mix LNS and float64 series")
    if not R._c.is_zero_at(0):
        raise ValueError("inner series must have a zero constant term")


def compose_naive(Q: TaylorSeries, R: TaylorSeries) -> TaylorSeries:
    """Horner evaluation of Q(R(eps)); O(p^3) scalar operations.

    Q's constant term is ignored; R's must be zero.  Returns the first p
    coefficients of the composition under R's tag.
    """
    _check_compose_args(Q, R)
    p = Q.order
    n = p + 1
    if p == 0:
        return zero_series(0, R.tag, R.kind)
    be = _BACKENDS[Q.kind]
    acc = be.zeros(n).with_coeff(0, Q.coeff(p))
    for i in range(p - 1, 0, -1):
        acc = acc.mul(R._c, n)
        if not Q._c.is_zero_at(i):
            acc = acc.with_coeff(0, _scalar_add(acc.get(0), Q.coeff(i)))
    acc = acc.mul(R._c, n)
    return TaylorSeries(R.tag, acc)


def compose_bk21(Q: TaylorSeries, R: TaylorSeries) -> TaylorSeries:
    """Fast composition by blocks of precomputed powers of R.

    Q is split into ceil((p+1)/m) blocks of degree below m = ceil(sqrt(p+1)).
    Each block is a linear combination of R, R^2, ..., R^(m-1); blocks are
    combined by Horner in R^m.  About 2*sqrt(p) series multiplications in
    total, so O(p^2.5) scalar operations.
    """
    _check_compose_args(Q, R)
    p = Q.order
    n = p + 1
    if p == 0:
        return zero_series(0, R.tag, R.kind)
    m = math.isqrt(p)
    if m * m < p + 1:
        m += 1  # m = ceil(sqrt(p + 1))
    be = _BACKENDS[Q.kind]

    # powers R^1 .. R^(m-1) (m - 1 <= p always), each truncated to order p
    rpow = [None, R._c]
    for t in range(2, m):
        rpow.append(rpow[-1].mul(R._c, n))
    stacked = be.stack_rows(rpow[1:]) if m > 1 else None

    nblocks = (p + 1 + m - 1) // m

    def block(b):
        # degree-(m-1) slice of Q evaluated at R as one linear combination
        lo = b * m + 1
        hi = min(b * m + m, p + 1)
        if stacked is None or hi <= lo:
            w = be.zeros(n)
        else:
            w = Q._c.comb_with_coeffs(stacked, lo, hi)
        if b > 0 and not Q._c.is_zero_at(b * m):
            w = w.with_coeff(0, _scalar_add(w.get(0), Q.coeff(b * m)))
        return w

    acc = block(nblocks - 1)
    if nblocks > 1:
        rm = rpow[m - 1].mul(R._c, n)
        for b in range(nblocks - 2, -1, -1):
            acc = acc.mul(rm, n)
            acc = acc.add(block(b))
    return TaylorSeries(R.tag, acc)


def _scalar_add(a, b):
    return a + b


def compose_dual(
    u_series: TaylorSeries, v_series: TaylorSeries, algorithm: str = "bk21"
) -> TaylorSeries:
    """Re-express <u, dv>_p through <v, dx>_p as <u, dx>_p.

    Strips both constant terms, composes the tails, reattaches u's value as
    the constant term and retags the result to v's tag.  u must be a series
    in the variable whose value is v's constant term.
    """
    if u_series.order != v_series.order:
        raise ValueError(
            f"series orders differ: {u_series.order} vs {v_series.order}"
        )
    zero = LogReal.zero() if u_series.kind == "lns" else 0.0
    q_tail = TaylorSeries(u_series.tag, u_series._c.with_coeff(0, zero))
    r_tail = TaylorSeries(v_series.tag, v_series._c.with_coeff(0, zero))
    if algorithm == "bk21":
        s = compose_bk21(q_tail, r_tail)
    elif algorithm == "naive":
        s = compose_naive(q_tail, r_tail)
    else:
        raise ValueError(f"unknown composition algorithm {algorithm!r}")
    return TaylorSeries(v_series.tag, s._c.with_coeff(0, u_series.coeff(0)))
