"""Vectorised double-double (~106-bit) arithmetic for phase-accurate sums.

A value is represented as a pair of float64 arrays (hi, lo) with
value = hi + lo and |lo| <= ulp(hi)/2.  Only the handful of operations
needed for evaluating integer polynomials modulo one are provided.
"""

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant


def two_sum(a, b):
    s = a + b
    v = s - a
    e = (a - (s - v)) + (b - v)
    return s, e


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def dd_add(xh, xl, yh, yl):
    sh, se = two_sum(xh, yh)
    se = se + (xl + yl)
    h = sh + se
    return h, se - (h - sh)


def dd_mul(xh, xl, yh, yl):
    ph, pe = two_prod(xh, yh)
    pe = pe + (xh * yl + xl * yh)
    h = ph + pe
    return h, pe - (h - ph)


def dd_mul_scalar(xh, xl, c):
    ph, pe = two_prod(xh, np.asarray(c, dtype=np.float64))
    pe = pe + xl * c
    h = ph + pe
    return h, pe - (h - ph)


def dd_pow_int(xh, xl, n):
    """x**n by binary exponentiation; n a nonnegative python int."""
    rh = np.ones_like(xh)
    rl = np.zeros_like(xh)
    bh, bl = xh, xl
    while n:
        if n & 1:
            rh, rl = dd_mul(rh, rl, bh, bl)
        n >>= 1
        if n:
            bh, bl = dd_mul(bh, bl, bh, bl)
    return rh, rl


def dd_mod1(xh, xl):
    """Fractional part in [0, 1), accurate to the low component."""
    fh = xh - np.floor(xh)
    h, l = two_sum(fh, xl)
    h2 = h - np.floor(h)
    h3, l3 = two_sum(h2, l)
    # one more wrap in case the low part pushed across an integer
    out = h3 + l3
    out = out - np.floor(out)
    return out
