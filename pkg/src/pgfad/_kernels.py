"""Compiled inner loops for truncated power series over the two scalar kinds.

LNS coefficient vectors are a pair of arrays: int8 signs in {-1, 0, +1} and
float64 log magnitudes (``-inf`` at zero entries, finite elsewhere).  Sums
inside the convolution-style recurrences are accumulated with the usual
max-shift trick: find the largest log magnitude among the terms, sum
``sign * exp(log - max)`` in linear space, and take one log at the end.
That is numerically equivalent to chaining pairwise log1p additions and
considerably cheaper.

The float64 kernels implement the same recurrences on plain coefficients;
they are the deliberately overflow-prone variant used for comparison runs.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf

# --------------------------------------------------------------------------
# scalar helper: signed log-space addition of (s1, l1) + (s2, l2)
# --------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _sadd(s1, l1, s2, l2):
    if s1 == 0:
        return s2, l2
    if s2 == 0:
        return s1, l1
    if l1 >= l2:
        sb, lb, d = s1, l1, l2 - l1
    else:
        sb, lb, d = s2, l2, l1 - l2
    if s1 == s2:
        return sb, lb + math.log1p(math.exp(d))
    if d == 0.0:
        return 0, NEG_INF
    e = math.exp(d)
    if e == 1.0:
        return 0, NEG_INF
    return sb, lb + math.log1p(-e)


# --------------------------------------------------------------------------
# LNS vector kernels
# --------------------------------------------------------------------------


@njit(cache=True)
def lns_add_vec(s1, l1, s2, l2):
    n = s1.shape[0]
    so = np.zeros(n, dtype=np.int8)
    lo = np.full(n, NEG_INF)
    for i in range(n):
        s, l = _sadd(s1[i], l1[i], s2[i], l2[i])
        so[i] = s
        lo[i] = l
    return so, lo


@njit(cache=True)
def lns_sum(s, l):
    """Signed log-sum-exp reduction of one coefficient vector."""
    m = NEG_INF
    for i in range(s.shape[0]):
        if s[i] != 0 and l[i] > m:
            m = l[i]
    if m == NEG_INF:
        return 0, NEG_INF
    r = 0.0
    for i in range(s.shape[0]):
        if s[i] != 0:
            r += s[i] * math.exp(l[i] - m)
    if r == 0.0:
        return 0, NEG_INF
    return (1 if r > 0.0 else -1), m + math.log(abs(r))


@njit(cache=True)
def lns_cauchy(sa, la, sb, lb, nout):
    """Truncated Cauchy product: out_i = sum_j a_j * b_{i-j}."""
    na = sa.shape[0]
    nb = sb.shape[0]
    so = np.zeros(nout, dtype=np.int8)
    lo = np.full(nout, NEG_INF)
    for i in range(nout):
        jlo = i - nb + 1
        if jlo < 0:
            jlo = 0
        jhi = i if i < na - 1 else na - 1
        m = NEG_INF
        for j in range(jlo, jhi + 1):
            if sa[j] != 0 and sb[i - j] != 0:
                t = la[j] + lb[i - j]
                if t > m:
                    m = t
        if m == NEG_INF:
            continue
        r = 0.0
        for j in range(jlo, jhi + 1):
            if sa[j] != 0 and sb[i - j] != 0:
                r += sa[j] * sb[i - j] * math.exp(la[j] + lb[i - j] - m)
        if r != 0.0:
            so[i] = 1 if r > 0.0 else -1
            lo[i] = m + math.log(abs(r))
    return so, lo


@njit(cache=True)
def lns_linear_comb(smat, lmat, svec, lvec):
    """out[i] = sum_t vec[t] * mat[t, i] over sign/log row vectors."""
    m, n = smat.shape
    so = np.zeros(n, dtype=np.int8)
    lo = np.full(n, NEG_INF)
    for i in range(n):
        mx = NEG_INF
        for t in range(m):
            if svec[t] != 0 and smat[t, i] != 0:
                v = lvec[t] + lmat[t, i]
                if v > mx:
                    mx = v
        if mx == NEG_INF:
            continue
        r = 0.0
        for t in range(m):
            if svec[t] != 0 and smat[t, i] != 0:
                r += svec[t] * smat[t, i] * math.exp(lvec[t] + lmat[t, i] - mx)
        if r != 0.0:
            so[i] = 1 if r > 0.0 else -1
            lo[i] = mx + math.log(abs(r))
    return so, lo


@njit(cache=True)
def lns_div(st, lt, sr, lr):
    """Series division t / r via s_i = (t_i - sum_{j<i} s_j r_{i-j}) / r_0."""
    n = st.shape[0]
    so = np.zeros(n, dtype=np.int8)
    lo = np.full(n, NEG_INF)
    s0 = sr[0]
    l0 = lr[0]
    for i in range(n):
        # acc = sum_{j=0}^{i-1} s_j * r_{i-j}
        m = NEG_INF
        for j in range(i):
            if so[j] != 0 and sr[i - j] != 0:
                t = lo[j] + lr[i - j]
                if t > m:
                    m = t
        sacc, lacc = 0, NEG_INF
        if m > NEG_INF:
            r = 0.0
            for j in range(i):
                if so[j] != 0 and sr[i - j] != 0:
                    r += so[j] * sr[i - j] * math.exp(lo[j] + lr[i - j] - m)
            if r != 0.0:
                sacc = 1 if r > 0.0 else -1
                lacc = m + math.log(abs(r))
        snum, lnum = _sadd(st[i], lt[i], -sacc, lacc)
        if snum != 0:
            so[i] = snum * s0
            lo[i] = lnum - l0
    return so, lo


@njit(cache=True)
def lns_exp(sr, lr):
    """Series exponential: e_0 = exp(r_0), e_i = (1/i) sum j r_j e_{i-j}."""
    n = sr.shape[0]
    so = np.zeros(n, dtype=np.int8)
    lo = np.full(n, NEG_INF)
    # constant term: exp of the linear value of r_0
    v0 = 0.0
    if sr[0] != 0:
        v0 = sr[0] * math.exp(lr[0])
    if v0 > NEG_INF:
        so[0] = 1
        lo[0] = v0
    for i in range(1, n):
        m = NEG_INF
        for j in range(1, i + 1):
            if sr[j] != 0 and so[i - j] != 0:
                t = math.log(j) + lr[j] + lo[i - j]
                if t > m:
                    m = t
        if m == NEG_INF:
            continue
        r = 0.0
        for j in range(1, i + 1):
            if sr[j] != 0 and so[i - j] != 0:
                r += sr[j] * so[i - j] * math.exp(math.log(j) + lr[j] + lo[i - j] - m)
        if r != 0.0:
            so[i] = 1 if r > 0.0 else -1
            lo[i] = m + math.log(abs(r)) - math.log(i)
    return so, lo


@njit(cache=True)
def lns_log(sr, lr):
    """Series logarithm: l_i = (i r_i - sum_{j<i} j l_j r_{i-j}) / (i r_0)."""
    n = sr.shape[0]
    so = np.zeros(n, dtype=np.int8)
    lo = np.full(n, NEG_INF)
    # constant term: log of X = exp(l0) is just l0 back in linear space
    v0 = lr[0]
    if v0 != 0.0:
        so[0] = 1 if v0 > 0.0 else -1
        lo[0] = math.log(abs(v0))
    for i in range(1, n):
        m = NEG_INF
        for j in range(1, i):
            if so[j] != 0 and sr[i - j] != 0:
                t = math.log(j) + lo[j] + lr[i - j]
                if t > m:
                    m = t
        sacc, lacc = 0, NEG_INF
        if m > NEG_INF:
            r = 0.0
            for j in range(1, i):
                if so[j] != 0 and sr[i - j] != 0:
                    r += so[j] * sr[i - j] * math.exp(math.log(j) + lo[j] + lr[i - j] - m)
            if r != 0.0:
                sacc = 1 if r > 0.0 else -1
                lacc = m + math.log(abs(r))
        li = math.log(i)
        snum, lnum = _sadd(sr[i], li + lr[i] if sr[i] != 0 else NEG_INF, -sacc, lacc)
        if snum != 0:
            so[i] = snum * sr[0]
            lo[i] = lnum - li - lr[0]
    return so, lo


@njit(cache=True)
def lns_pow(sr, lr, alpha):
    """Series power r**alpha: p_i = sum (j(alpha+1) - i) r_j p_{i-j} / (i r_0)."""
    n = sr.shape[0]
    so = np.zeros(n, dtype=np.int8)
    lo = np.full(n, NEG_INF)
    # constant term r_0 ** alpha; caller guarantees sign rules are legal
    s0 = 1
    if sr[0] < 0:
        # alpha is an integer here (checked by the caller)
        if int(round(alpha)) % 2 != 0:
            s0 = -1
    if alpha != 0.0:
        so[0] = s0
        lo[0] = alpha * lr[0]
    else:
        so[0] = 1
        lo[0] = 0.0
    for i in range(1, n):
        m = NEG_INF
        for j in range(1, i + 1):
            c = j * (alpha + 1.0) - i
            if c != 0.0 and sr[j] != 0 and so[i - j] != 0:
                t = math.log(abs(c)) + lr[j] + lo[i - j]
                if t > m:
                    m = t
        if m == NEG_INF:
            continue
        r = 0.0
        for j in range(1, i + 1):
            c = j * (alpha + 1.0) - i
            if c != 0.0 and sr[j] != 0 and so[i - j] != 0:
                cs = 1 if c > 0.0 else -1
                r += cs * sr[j] * so[i - j] * math.exp(
                    math.log(abs(c)) + lr[j] + lo[i - j] - m
                )
        if r != 0.0:
            s = 1 if r > 0.0 else -1
            so[i] = s * sr[0]
            lo[i] = m + math.log(abs(r)) - math.log(i) - lr[0]
    return so, lo


# --------------------------------------------------------------------------
# float64 kernels (the overflow-prone comparison variant)
# --------------------------------------------------------------------------


@njit(cache=True)
def f64_div(t, r):
    n = t.shape[0]
    out = np.zeros(n)
    r0 = r[0]
    for i in range(n):
        acc = t[i]
        for j in range(i):
            acc -= out[j] * r[i - j]
        out[i] = acc / r0
    return out


@njit(cache=True)
def f64_exp(r):
    n = r.shape[0]
    out = np.zeros(n)
    out[0] = math.exp(r[0])
    for i in range(1, n):
        acc = 0.0
        for j in range(1, i + 1):
            acc += j * r[j] * out[i - j]
        out[i] = acc / i
    return out


@njit(cache=True)
def f64_log(r):
    n = r.shape[0]
    out = np.zeros(n)
    out[0] = math.log(r[0])
    for i in range(1, n):
        acc = i * r[i]
        for j in range(1, i):
            acc -= j * out[j] * r[i - j]
        out[i] = acc / (i * r[0])
    return out


@njit(cache=True)
def f64_pow(r, alpha):
    n = r.shape[0]
    out = np.zeros(n)
    out[0] = r[0] ** alpha
    for i in range(1, n):
        acc = 0.0
        for j in range(1, i + 1):
            acc += (j * (alpha + 1.0) - i) * r[j] * out[i - j]
        out[i] = acc / (i * r[0])
    return out


def warmup():
    """Force compilation of all kernels (used by benchmarks before timing)."""
    s = np.array([1, -1, 1], dtype=np.int8)
    l = np.array([0.0, -1.0, -2.0])
    f = np.array([1.0, 0.5, 0.25])
    lns_add_vec(s, l, s, l)
    lns_sum(s, l)
    lns_cauchy(s, l, s, l, 3)
    lns_linear_comb(np.stack((s, s)), np.stack((l, l)), s[:2], l[:2])
    lns_div(s, l, s, l)
    lns_exp(s, l)
    lns_log(s, l)
    lns_pow(s, l, 0.5)
    f64_div(f, f)
    f64_exp(f)
    f64_log(f)
    f64_pow(f, 0.5)
