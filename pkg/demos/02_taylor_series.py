"""Truncated Taylor series as generalized dual numbers.

lift_var(x, p) starts a series (x, 1, 0, ..., 0) tagged with a fresh
variable; arithmetic and the elementary functions propagate all p+1
coefficients.  extract_derivative recovers raw derivatives, diff shifts a
series down by q derivative orders, and two series can be composed to
re-express one quantity through an earlier variable.
"""

import math

from pgfad import (
    LogReal,
    compose_bk21,
    compose_dual,
    compose_naive,
    diff,
    exp,
    extract_derivative,
    lift_var,
    power,
)

# derivatives of exp(x^2) at x = 1, to order 3
x = lift_var(1.0, 3)
f = exp(x * x)
print("exp(x^2) coefficients at 1:", [round(c / math.e, 4) for c in f.coeffs()])
print("third derivative           :", extract_derivative(f, 3), "= e *", 20.0)

# the same computation over LNS scalars survives extreme magnitudes
xl = lift_var(LogReal.from_real(1.0), 3)
fl = exp(xl * xl)
print("same over LNS              :", [round(c.to_real() / math.e, 4) for c in fl.coeffs()])

# diff: d^2/dx^2 of x^3 is the function 6x
cube = x * x * x
print("\ndiff(x^3, 2) coefficients  :", diff(cube, 2).coeffs())

# composition: sqrt(exp(v)) through v(x) = x^2 equals exp(x^2 / 2)
v = x * x
u = power(exp(lift_var(v.coeff(0), 3)), 0.5)
composed = compose_dual(u, v)
direct = exp(v * 0.5)
print("\ncomposed vs direct lift:")
print("  composed:", [round(c, 6) for c in composed.coeffs()])
print("  direct  :", [round(c, 6) for c in direct.coeffs()])

# the fast block composition agrees with the Horner one
from pgfad.series import TaylorSeries, _F64Coeffs

tag = x.tag
Q = TaylorSeries(tag, _F64Coeffs([0.0, 1.0, 0.5, 1.0 / 6.0]))
R = TaylorSeries(tag, _F64Coeffs([0.0, 1.0, -0.5, 1.0 / 3.0]))
print("\nQ(R) naive:", [round(c, 10) for c in compose_naive(Q, R).coeffs()])
print("Q(R) fast :", [round(c, 10) for c in compose_bk21(Q, R).coeffs()])
