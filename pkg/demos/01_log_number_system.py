"""Signed log-space scalars: arithmetic far beyond float64's range.

A LogReal stores a number as its sign plus the natural log of its
magnitude.  Multiplication and powers act on the log directly; addition
uses log1p, so values like 1/300! combine without ever underflowing.
"""

import math

from pgfad import LogReal

# ordinary values round-trip
a = LogReal.from_real(-2.0)
b = LogReal.from_real(3.0)
print("(-2) * 3          =", (a * b).to_real())
print("(-2) + 3          =", (a + b).to_real())

# 1/300! is around 1e-615: hopeless in float64, trivial here
tiny = LogReal.from_log(-math.lgamma(301))
print("\n1/300! as float   =", tiny.to_real(), "(underflows)")
print("1/300! log mag    =", tiny.logmag)
print("(1/300!)^2 logmag =", (tiny ** 2).logmag, "(still exact)")

# addition deep in log space keeps full precision
x = LogReal.from_log(-1000.0)
print("\nexp(-1000) + exp(-1000):")
print("  log magnitude   =", (x + x).logmag, "(= -1000 + ln 2)")

# exact cancellation gives the canonical zero
z = LogReal.from_real(3.0) - LogReal.from_real(3.0)
print("\n3 - 3 -> sign", z.sign, "(canonical zero)")

# adding zero is the identity, and a constant-time fast path
print("a + 0 is a        :", (a + LogReal.zero()) is a)
