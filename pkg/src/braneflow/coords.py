"""Charts on C_w x C*_y, the symplectic form, the local superpotential and stops.

Real coordinates are (u, v, r, theta) with w = u + iv and y = -exp(i theta)/r,
r in (-inf, 0]. The stratum r = 0 sits at |y| = infinity: it carries the stops
and is admitted as a valid point, but the complex fiber view is undefined there.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class BoundaryStratumError(ValueError):
    """Raised when a complex fiber view is requested on the r = 0 stratum."""


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), TWO_PI)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def circular_distance(a, b):
    """Chord distance 2 |sin((a - b)/2)| between angles."""
    return np.abs(2.0 * np.sin(0.5 * (np.asarray(a) - np.asarray(b))))


@dataclass(frozen=True)
class PhasePoint:
    u: float
    v: float
    r: float
    theta: float

    def __post_init__(self):
        if not self.r <= 0.0:
            raise ValueError(f"fiber height must satisfy r <= 0, got r={self.r!r}")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def w(self) -> complex:
        return complex(self.u, self.v)

    @property
    def y(self) -> complex:
        if self.r == 0.0:
            raise BoundaryStratumError("y is an ideal point on the r = 0 stratum")
        return -cmath.exp(1j * self.theta) / self.r

    @property
    def R(self) -> float:
        return math.hypot(self.u, self.v)

    @property
    def Theta(self) -> float:
        return math.atan2(self.v, self.u)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.r, self.theta])


@dataclass(frozen=True)
class TangentVector:
    du: float
    dv: float
    dr: float
    dtheta: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.as_tuple()):
            raise ValueError(f"tangent vector has nonfinite components: {self}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.du, self.dv, self.dr, self.dtheta)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def polar(self, p: PhasePoint) -> tuple[float, float]:
        """Base components (dR, dTheta) at p; undefined at R = 0."""
        R = p.R
        if R == 0.0:
            raise ValueError("polar base components are undefined at R = 0")
        dR = (p.u * self.du + p.v * self.dv) / R
        dTheta = (p.u * self.dv - p.v * self.du) / (R * R)
        return dR, dTheta

    @classmethod
    def from_array(cls, a) -> "TangentVector":
        return cls(*(float(c) for c in a))


def to_complex(p: PhasePoint) -> tuple[complex, complex]:
    if p.r == 0.0:
        raise BoundaryStratumError("to_complex needs r < 0; r = 0 maps to |y| = inf")
    return p.w, p.y


def from_complex(w: complex, y: complex) -> PhasePoint:
    if y == 0:
        raise ValueError("y = 0 lies outside C*")
    r = -1.0 / abs(y)
    return PhasePoint(w.real, w.imag, r, cmath.phase(-y * r))


# Matrix of omega = du^dv + dr^dtheta in the (u, v, r, theta) basis.
OMEGA = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


class SymplecticForm:
    """The form (i/2)(dw^dw~ + |y|^-3 dy^dy~), i.e. du^dv + dr^dtheta."""

    matrix = OMEGA

    def real(self, p: PhasePoint, A: TangentVector, B: TangentVector) -> float:
        return (A.du * B.dv - A.dv * B.du) + (A.dr * B.dtheta - A.dtheta * B.dr)

    def complex_chart(self, p: PhasePoint, A: TangentVector, B: TangentVector) -> float:
        """Evaluate the complex-coordinate presentation pushed through the chart."""
        if p.r == 0.0:
            raise BoundaryStratumError("complex chart evaluation needs r < 0")
        r, e = p.r, cmath.exp(1j * p.theta)

        def dw(X):
            return complex(X.du, X.dv)

        def dy(X):
            # y = -e^{i theta}/r
            return e / (r * r) * X.dr - 1j * e / r * X.dtheta

        def pair(a, b):
            # (i/2)(dz^dz~)(A, B) = -Im(dz(A) conj(dz(B)))
            return -(a * b.conjugate()).imag

        weight = abs(p.y) ** -3
        return pair(dw(A), dw(B)) + weight * pair(dy(A), dy(B))


omega = SymplecticForm()


def omega_eval(p: PhasePoint, A: TangentVector, B: TangentVector) -> float:
    return omega.real(p, A, B)


def superpotential(p: PhasePoint) -> complex:
    """Local superpotential W = w y near a puncture."""
    w, y = to_complex(p)
    return w * y


def stop_angle(Theta: float) -> float:
    """Fiber angle of the stop over a base point with argument Theta.

    The stop locus is {r = 0, theta = -Theta}; there is no stop over w = 0,
    so callers are responsible for only asking at R > 0.
    """
    if not math.isfinite(Theta):
        raise ValueError("base argument must be finite")
    return wrap_angle(-Theta)
