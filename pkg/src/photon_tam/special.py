"""Error function and Gaussian tail helpers.

``erf`` uses the non-alternating series
``erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!`` below
``SERIES_LIMIT`` (all terms positive, so no cancellation) and the
continued fraction of ``erfc`` above it.
"""

import math

SERIES_LIMIT = 3.0
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _erf_series(x):
    x2 = x * x
    term = x
    total = x
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term <= 1e-17 * total:
            break
    return _TWO_OVER_SQRT_PI * math.exp(-x2) * total


def _erfc_continued_fraction(x):
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    k = 1
    while True:
        a_k = 0.5 * k
        d = x + a_k * d
        d = 1.0 / (d if d != 0.0 else tiny)
        c = x + a_k / c
        if c == 0.0:
            c = tiny
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
        k += 1
        if k > 5000:
            break
    return math.exp(-x * x) / math.sqrt(math.pi) / f


def erf(x):
    x = float(x)
    if math.isnan(x):
        return x
    if x < 0.0:
        return -erf(-x)
    if x == 0.0:
        return 0.0
    if x < SERIES_LIMIT:
        return _erf_series(x)
    return 1.0 - _erfc_continued_fraction(x)


def erfc(x):
    x = float(x)
    if x < SERIES_LIMIT:
        return 1.0 - erf(x)
    return _erfc_continued_fraction(x)


def chi3_tail(x):
    """P(|X| > x) for a standard normal 3-vector X."""
    if x <= 0.0:
        return 1.0
    return erfc(x / math.sqrt(2.0)) + math.sqrt(2.0 / math.pi) * x * math.exp(-0.5 * x * x)
