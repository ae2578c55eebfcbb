"""Signed arithmetic on numbers stored as sign plus natural-log magnitude.

A :class:`LogReal` represents a real number ``X`` as ``sign(X)`` together
with ``log|X|``.  Multiplication, division and powers are exact up to one
floating-point operation on the log magnitude; addition and subtraction go
through ``log1p`` so that values with wildly different magnitudes combine
without overflow or underflow.  This makes it possible to carry quantities
like ``1/300!`` (far below double-precision underflow) through long chains
of arithmetic.

Zero is canonical: ``sign == 0`` and the stored log magnitude is never
read.  No operation ever stores a NaN log magnitude, and an infinite log
magnitude is treated as a hard overflow error rather than a value.
"""

from __future__ import annotations

import math

__all__ = ["LogReal", "isclose_log", "LOG_ZERO_FLOOR"]

# Linear-space magnitude below which a value is considered indistinguishable
# from zero when comparing a zero against a nonzero result.
LOG_ZERO_FLOOR = math.log(1e-300)

_MAX_EXP_ARG = math.log(1.7976931348623157e308)  # exp beyond this overflows


class LogReal:
    """A signed real stored as ``(sign, log|X|)`` with ``sign in {-1, 0, +1}``."""

    __slots__ = ("sign", "logmag")

    def __init__(self, sign: int, logmag: float):
        if sign == 0:
            object.__setattr__(self, "sign", 0)
            object.__setattr__(self, "logmag", 0.0)
            return
        if math.isnan(logmag):
            raise ArithmeticError("NaN log magnitude")
        if math.isinf(logmag):
            if logmag > 0:
                raise OverflowError("log magnitude overflow")
            # -inf means an exact zero produced by cancellation
            object.__setattr__(self, "sign", 0)
            object.__setattr__(self, "logmag", 0.0)
            return
        object.__setattr__(self, "sign", 1 if sign > 0 else -1)
        object.__setattr__(self, "logmag", float(logmag))

    def __setattr__(self, name, value):  # pragma: no cover - defensive
        raise AttributeError("LogReal is immutable")

    # -- construction ------------------------------------------------------

    @classmethod
    def from_real(cls, x: float) -> "LogReal":
        """Convert a finite float to its sign/log-magnitude form."""
        if isinstance(x, LogReal):
            return x
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"cannot represent {x!r} in log space")
        if x == 0.0:
            return _ZERO
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, ell: float, sign: int = 1) -> "LogReal":
        """The number ``sign * exp(ell)`` without ever forming ``exp(ell)``."""
        ell = float(ell)
        if math.isnan(ell) or math.isinf(ell):
            raise ValueError(f"log magnitude must be finite, got {ell!r}")
        if sign == 0:
            raise ValueError("from_log needs a nonzero sign")
        return cls(sign, ell)

    @classmethod
    def zero(cls) -> "LogReal":
        return _ZERO

    @classmethod
    def one(cls) -> "LogReal":
        return _ONE

    # -- conversion --------------------------------------------------------

    def to_real(self) -> float:
        """Back to an ordinary float (0.0 on underflow, +-inf on overflow)."""
        if self.sign == 0:
            return 0.0
        if self.logmag > _MAX_EXP_ARG:
            return math.inf if self.sign > 0 else -math.inf
        return self.sign * math.exp(self.logmag)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    # -- arithmetic --------------------------------------------------------

    def __neg__(self) -> "LogReal":
        if self.sign == 0:
            return self
        return LogReal(-self.sign, self.logmag)

    def __add__(self, other) -> "LogReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        # adding zero is the identity and costs nothing
        if other.sign == 0:
            return self
        if self.sign == 0:
            return other
        if self.logmag >= other.logmag:
            big, small = self, other
        else:
            big, small = other, self
        d = small.logmag - big.logmag
        if big.sign == small.sign:
            return LogReal(big.sign, big.logmag + math.log1p(math.exp(d)))
        if d == 0.0:
            return _ZERO  # exact cancellation
        e = math.exp(d)
        if e == 1.0:  # rounds to full cancellation
            return _ZERO
        return LogReal(big.sign, big.logmag + math.log1p(-e))

    __radd__ = __add__

    def __sub__(self, other) -> "LogReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "LogReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "LogReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.sign == 0 or other.sign == 0:
            return _ZERO
        return LogReal(self.sign * other.sign, self.logmag + other.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.sign == 0:
            raise ZeroDivisionError("division by LNS zero")
        if self.sign == 0:
            return _ZERO
        return LogReal(self.sign * other.sign, self.logmag - other.logmag)

    def __rtruediv__(self, other) -> "LogReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, r: float) -> "LogReal":
        r = float(r)
        if self.sign == 0:
            if r > 0:
                return _ZERO
            if r == 0:
                return _ONE
            raise ZeroDivisionError("0 cannot be raised to a negative power")
        if self.sign < 0:
            if r != round(r):
                raise ValueError("negative base with fractional exponent")
            sign = -1 if int(round(r)) % 2 else 1
        else:
            sign = 1
        return LogReal(sign, self.logmag * r)

    # -- scalar transcendentals (used when lifting series over LogReal) ----

    def exp(self) -> "LogReal":
        """exp(X); the new log magnitude is the linear value of X."""
        return LogReal(1, self.to_real())

    def log(self) -> "LogReal":
        """log(X) for positive X; the result is just from_real(logmag)."""
        if self.sign <= 0:
            raise ValueError("log of a non-positive LNS value")
        return LogReal.from_real(self.logmag)

    def sqrt(self) -> "LogReal":
        return self ** 0.5

    # -- ordering: sign first, then log magnitude --------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, LogReal):
            if self.sign != other.sign:
                return False
            return self.sign == 0 or self.logmag == other.logmag
        if isinstance(other, (int, float)):
            return self == LogReal.from_real(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.sign, self.logmag if self.sign else 0.0))

    def __lt__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.sign != other.sign:
            return self.sign < other.sign
        if self.sign == 0:
            return False
        if self.sign > 0:
            return self.logmag < other.logmag
        return self.logmag > other.logmag

    def __le__(self, other) -> bool:
        lt = self < other
        if lt is NotImplemented:
            return NotImplemented
        return lt or self == other

    def __gt__(self, other) -> bool:
        le = self <= other
        if le is NotImplemented:
            return NotImplemented
        return not le

    def __ge__(self, other) -> bool:
        lt = self < other
        if lt is NotImplemented:
            return NotImplemented
        return not lt

    def __abs__(self) -> "LogReal":
        if self.sign < 0:
            return -self
        return self

    def __bool__(self) -> bool:
        return self.sign != 0

    # -- debug form: "+<logmag>" / "-<logmag>" ------------------------------

    def __str__(self) -> str:
        if self.sign == 0:
            return "0"
        return f"{'+' if self.sign > 0 else '-'}{self.logmag:.4e}"

    def __repr__(self) -> str:
        if self.sign == 0:
            return "LogReal(0)"
        return f"LogReal({self.sign:+d}, {self.logmag!r})"


def _coerce(x):
    if isinstance(x, LogReal):
        return x
    if isinstance(x, (int, float)):
        return LogReal.from_real(x)
    return NotImplemented


_ZERO = object.__new__(LogReal)
object.__setattr__(_ZERO, "sign", 0)
object.__setattr__(_ZERO, "logmag", 0.0)

_ONE = object.__new__(LogReal)
object.__setattr__(_ONE, "sign", 1)
object.__setattr__(_ONE, "logmag", 0.0)


def isclose_log(a, b, rtol: float = 1e-10, floor: float = 1e-300) -> bool:
    """Closeness test in log-magnitude space.

    Both values nonzero: signs must match and the log magnitudes must agree
    to within ``rtol`` (for small differences ``|log a - log b|`` is the
    relative error).  A zero against a nonzero passes only when the nonzero
    magnitude is below ``floor`` in linear space.
    """
    a = LogReal.from_real(a) if not isinstance(a, LogReal) else a
    b = LogReal.from_real(b) if not isinstance(b, LogReal) else b
    if a.sign == 0 and b.sign == 0:
        return True
    if a.sign == 0 or b.sign == 0:
        nz = b if a.sign == 0 else a
        return nz.logmag <= math.log(floor)
    if a.sign != b.sign:
        return False
    return abs(a.logmag - b.logmag) <= rtol
