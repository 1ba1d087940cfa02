"""Dawson's integral F(x) = exp(-x^2) * int_0^x exp(a^2) da.

The closed-form Hamiltonian only ever needs the combination
exp(-R^2)/R * int_0^R exp(a^2) da = F(R)/R, and computing it through erfi
overflows long before R = 30. Three regimes are used:

* x < 0.5:   Maclaurin series, sum_n (-2)^n x^(2n+1) / (2n+1)!!
* x < 6.5:   continued fraction x / (1 + 2x^2 - 4x^2 / (3 + 2x^2 - 8x^2 / ...)),
             evaluated bottom-up at fixed depth
* otherwise: asymptotic series (1/2x) sum_n (2n-1)!! / (2x^2)^n

Each branch is accurate to a few ulps in its range (checked against
high-precision quadrature in the test suite).
"""

from __future__ import annotations

import numpy as np

SERIES_MAX = 0.5
ASYMPTOTIC_MIN = 6.5

_SERIES_TERMS = 20
_CF_DEPTH = 64
_ASYMPTOTIC_TERMS = 30


def _series(x):
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for n in range(1, _SERIES_TERMS):
        term = term * (-2.0 * x2 / (2 * n + 1))
        total = total + term
    return total


def _continued_fraction(x):
    x2 = x * x
    tail = np.zeros_like(x)
    for k in range(_CF_DEPTH, 0, -1):
        tail = 4.0 * k * x2 / (2 * k + 1 + 2.0 * x2 - tail)
    return x / (1.0 + 2.0 * x2 - tail)


def _asymptotic(x):
    inv = 1.0 / (2.0 * x * x)
    term = np.ones_like(x)
    total = np.ones_like(x)
    # terms decrease monotonically for n < x^2 (>= 42 here)
    for n in range(1, _ASYMPTOTIC_TERMS):
        term = term * ((2 * n - 1) * inv)
        total = total + term
    return total / (2.0 * x)


def dawson(x):
    """Dawson's integral for x >= 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("dawson is evaluated on R >= 0 only; use F(-x) = -F(x)")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)

    small = flat < SERIES_MAX
    large = flat >= ASYMPTOTIC_MIN
    mid = ~(small | large)
    if small.any():
        out[small] = _series(flat[small])
    if mid.any():
        out[mid] = _continued_fraction(flat[mid])
    if large.any():
        big = flat[large]
        finite = np.isfinite(big)
        vals = np.zeros_like(big)
        vals[finite] = _asymptotic(big[finite])
        out[large] = vals

    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def dawson_derivative(x):
    """F'(x) = 1 - 2 x F(x)."""
    x = np.asarray(x, dtype=float)
    return 1.0 - 2.0 * x * dawson(x)


# Series coefficients of q(x) = F(x)/x - 1 = sum_{n>=1} c_n x^(2n),
# c_n = (-2)^n / (2n+1)!!
_Q_TERMS = 24
_Q_COEFFS = np.empty(_Q_TERMS)
_c = 1.0
for _n in range(1, _Q_TERMS + 1):
    _c *= -2.0 / (2 * _n + 1)
    _Q_COEFFS[_n - 1] = _c
del _c, _n


def dawson_ratio_parts(x):
    """Return q(x) = F(x)/x - 1 and q'(x)/x, smooth through x = 0.

    Both quantities have removable singularities at the origin, so the small
    range goes through their power series instead of dividing by x.
    """
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    q = np.empty_like(flat)
    dq = np.empty_like(flat)

    small = flat < SERIES_MAX
    if small.any():
        xs2 = flat[small] ** 2
        qs = np.zeros_like(xs2)
        dqs = np.zeros_like(xs2)
        # Horner in x^2, highest order first
        for n in range(_Q_TERMS, 0, -1):
            c = _Q_COEFFS[n - 1]
            qs = qs * xs2 + c
            dqs = dqs * xs2 + 2 * n * c
        q[small] = qs * xs2
        dq[small] = dqs
    rest = ~small
    if rest.any():
        xr = flat[rest]
        F = dawson(xr)
        q[rest] = F / xr - 1.0
        dq[rest] = (xr - 2.0 * xr * xr * F - F) / xr**3

    if x.ndim == 0:
        return float(q[0]), float(dq[0])
    return q.reshape(x.shape), dq.reshape(x.shape)
