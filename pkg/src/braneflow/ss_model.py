"""Exactly solvable analogue: H = Im(w) on the surface xy = w.

With the flat Kaehler structure on (x, y) the Hamiltonian flow of Im(xy) is
the linear system x' = conj(y), y' = conj(x), solved by

    x(t) = x0 cosh t + conj(y0) sinh t,   y(t) = y0 cosh t + conj(x0) sinh t.

In the variables a = x + conj(y), b = x - conj(y) it decouples into a' = a,
b' = -b, so {y = conj(x)} (b = 0) is the unstable locus and {y = -conj(x)}
(a = 0) the stable one.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import root


@dataclass(frozen=True)
class SurfacePoint:
    x: complex
    y: complex

    def __post_init__(self):
        if not (cmath.isfinite(self.x) and cmath.isfinite(self.y)):
            raise ValueError("surface point must be finite")

    @property
    def w(self) -> complex:
        return self.x * self.y


def ss_flow_array(x, y, t):
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    c, s = np.cosh(t), np.sinh(t)
    return x * c + np.conj(y) * s, y * c + np.conj(x) * s


def ss_flow(p: SurfacePoint, t: float) -> SurfacePoint:
    x, y = ss_flow_array(p.x, p.y, t)
    return SurfacePoint(complex(x), complex(y))


def ss_vector_field(p: SurfacePoint) -> tuple[complex, complex]:
    return p.y.conjugate(), p.x.conjugate()


def unstable_residual(p: SurfacePoint) -> float:
    """|y - conj(x)|, the distance proxy to the limit brane {y = conj(x)}."""
    return abs(p.y - p.x.conjugate())


def stable_residual(p: SurfacePoint) -> float:
    return abs(p.y + p.x.conjugate())


def ss_vanishing_cycle(eps: float, s: float, t: float) -> SurfacePoint:
    """Flow the vanishing-cycle point (sqrt(eps) e^{is}, sqrt(eps) e^{-is}) for time t."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    q = math.sqrt(eps)
    return ss_flow(SurfacePoint(q * cmath.exp(1j * s), q * cmath.exp(-1j * s)), t)


def ss_make_U_arrays(w_star: float, v_samples: Sequence[float], y_samples: Sequence[float]):
    if not w_star < 0:
        raise ValueError("w* must be negative")
    ys = np.asarray(y_samples, dtype=float)
    if np.any(ys <= 0):
        raise ValueError("fiber samples must be positive reals")
    vs = np.asarray(v_samples, dtype=float)
    V, Y = np.meshgrid(vs, ys, indexing="ij")
    Y = Y.ravel().astype(complex)
    X = (w_star + 1j * V.ravel()) / Y
    return X, Y


def ss_make_U(w_star: float, v_samples: Sequence[float], y_samples: Sequence[float]) -> list[SurfacePoint]:
    """Fiber rays over the vertical base line Re(w) = w*: x = (w* + iv)/y, y > 0."""
    X, Y = ss_make_U_arrays(w_star, v_samples, y_samples)
    return [SurfacePoint(complex(x), complex(y)) for x, y in zip(X, Y)]


def find_stable_intersection(w_star: float, guess: tuple[float, float] = (0.3, 0.5)) -> SurfacePoint:
    """Locate U~ intersect {y = -conj(x)} by solving y + conj(x) = 0 over (v, y)."""
    if not w_star < 0:
        raise ValueError("w* must be negative")

    def resid(z):
        v, yr = z
        x = (w_star + 1j * v) / yr
        e = yr + x.conjugate()
        return [e.real, e.imag]

    sol = root(resid, guess, tol=1e-14)
    v, yr = sol.x
    if not sol.success or yr <= 0:
        raise RuntimeError(f"no stable intersection found from guess {guess}: {sol.message}")
    return SurfacePoint((w_star + 1j * v) / yr, complex(yr))


@dataclass
class SSReport:
    times: list[float]
    max_residual: list[float | None]
    n_points_in_window: list[int]
    im_w_drift: list[float]
    re_w_monotone: bool
    stable_intersection: SurfacePoint | None = None

    def rows(self):
        for row in zip(self.times, self.max_residual, self.n_points_in_window):
            yield row


def ss_convergence(
    w_star: float,
    samples: tuple[Sequence[float], Sequence[float]],
    window: tuple[float, float],
    times: Sequence[float],
    margin: float = 0.1,
) -> SSReport:
    """Flow U~ and track max |y - conj(x)| over points with Re(w) in ``window``
    and |Im(w)| <= ``margin``."""
    lo, hi = window
    if not 0 <= lo < hi:
        raise ValueError("window must lie on the positive real axis")
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be increasing")
    X0, Y0 = ss_make_U_arrays(w_star, *samples)
    W0 = X0 * Y0
    rep = SSReport([], [], [], [], True)
    prev_re = W0.real
    for t in times:
        X, Y = ss_flow_array(X0, Y0, t)
        W = X * Y
        rep.times.append(t)
        rep.im_w_drift.append(float(np.max(np.abs(W.imag - W0.imag))))
        if np.any(W.real < prev_re - 1e-12 * np.maximum(1.0, np.abs(prev_re))):
            rep.re_w_monotone = False
        prev_re = W.real
        inside = (W.real >= lo) & (W.real <= hi) & (np.abs(W.imag) <= margin)
        rep.n_points_in_window.append(int(inside.sum()))
        if inside.any():
            rep.max_residual.append(float(np.max(np.abs(Y[inside] - np.conj(X[inside])))))
        else:
            rep.max_residual.append(None)
    return rep
