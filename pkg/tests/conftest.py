import math

import numpy as np
import pytest

from pgfad.lns import LogReal


def scalar_float(v):
    """Linear value of a coefficient regardless of scalar kind."""
    return v.to_real() if isinstance(v, LogReal) else float(v)


def rel_err(a, b, floor=1e-300):
    """Relative error usable across LNS and float scalars.

    Nonzero pairs with equal signs are compared in log-magnitude space
    (|log a - log b| is the relative error for small differences); a sign
    mismatch is an error of at least 1; a zero against a value below the
    linear-space floor counts as zero error.
    """
    a = a if isinstance(a, LogReal) else LogReal.from_real(a)
    b = b if isinstance(b, LogReal) else LogReal.from_real(b)
    if a.sign == 0 and b.sign == 0:
        return 0.0
    if a.sign == 0 or b.sign == 0:
        nz = a if b.sign == 0 else b
        return 0.0 if nz.logmag <= math.log(floor) else math.inf
    if a.sign != b.sign:
        return math.inf
    d = abs(a.logmag - b.logmag)
    return abs(math.expm1(d)) if d < 1.0 else math.inf


def series_max_rel_err(s1, s2):
    assert s1.order == s2.order
    return max(rel_err(a, b) for a, b in zip(s1.coeffs(), s2.coeffs()))


def assert_series_close(s, expected, rtol=1e-10, atol=0.0):
    """Compare a series against plain float coefficients."""
    got = [scalar_float(c) for c in s.coeffs()]
    np.testing.assert_allclose(got, expected, rtol=rtol, atol=atol)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
