"""The stop-preserving Hamiltonian family and its vector field.

The ansatz is H = (a(r) g(R) + b(r) R) sin(Theta), where g(R) = f(R) R solves the
radial equation forced by requiring fibers at r = 0 to counter-rotate with the
base. With k = b'(0)/a'(0) and s = sqrt(a'(0)/2) the regular solution is

    g(R) = k (F(s R)/s - R),        F = Dawson's integral,

which is the erfi form of the general solution with the integration constant
fixed to zero. In Cartesian form H = phi(R, r) v with

    phi = a(r) k q(s R) + b(r),     q(x) = F(x)/x - 1.

Two model Hamiltonians are also available: H = R v and H = v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special as sp

from .coords import OMEGA, PhasePoint, TangentVector
from .special import dawson, dawson_ratio_parts

KINDS = ("paper", "model_Rv", "model_v")


def a_default(r):
    return np.exp(2.0 * np.asarray(r, dtype=float))


def da_default(r):
    return 2.0 * np.exp(2.0 * np.asarray(r, dtype=float))


def b_default(r):
    return -np.expm1(np.asarray(r, dtype=float))


def db_default(r):
    return -np.exp(np.asarray(r, dtype=float))


class PresentationMismatch(RuntimeError):
    """The polar, Cartesian and complex evaluations of H disagree."""


@dataclass(frozen=True)
class HamiltonianSpec:
    """Selects a Hamiltonian and, for ``kind="paper"``, its profile functions.

    ``a``/``b`` (and their derivatives ``da``/``db``) must accept numpy arrays.
    ``perturb_f`` adds ``perturb_f * R`` to f(R); it exists only so negative
    controls can break the radial equation on purpose.
    """

    kind: str = "paper"
    a: Callable = a_default
    da: Callable = da_default
    b: Callable = b_default
    db: Callable = db_default
    a_prime0: float = 2.0
    b_prime0: float = -1.0
    C: float = 0.0
    perturb_f: float = 0.0
    check_boundary: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != "paper":
            return
        if not self.a_prime0 > 0:
            raise ValueError("a'(0) must be positive for the regular radial solution")
        if self.C != 0.0:
            raise ValueError("integration constant C must be 0 so that f(R) R vanishes at R = 0")
        if self.check_boundary:
            checks = {
                "a(0) = 1": abs(float(self.a(0.0)) - 1.0),
                "b(0) = 0": abs(float(self.b(0.0))),
                "a(-inf) = 0": abs(float(self.a(-20.0))),
                "b(-inf) = 1": abs(float(self.b(-20.0)) - 1.0),
            }
            bad = [name for name, err in checks.items() if not err < 1e-8]
            if bad:
                raise ValueError(f"profile boundary conditions violated: {', '.join(bad)}")

    @property
    def k(self) -> float:
        return self.b_prime0 / self.a_prime0

    @property
    def s(self) -> float:
        return math.sqrt(self.a_prime0 / 2.0)

    @classmethod
    def paper(cls, **overrides) -> "HamiltonianSpec":
        return cls(kind="paper", **overrides)

    @classmethod
    def model_Rv(cls) -> "HamiltonianSpec":
        return cls(kind="model_Rv")

    @classmethod
    def model_v(cls) -> "HamiltonianSpec":
        return cls(kind="model_v")


# ---------------------------------------------------------------------------
# radial profile


def _require_profile(spec: HamiltonianSpec, what: str):
    if spec.kind != "paper":
        raise ValueError(f"{what} is only defined for kind='paper'")


def radial_profile(spec: HamiltonianSpec, R):
    """g(R) = f(R) R for the regular (C = 0) solution."""
    _require_profile(spec, "radial_profile")
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise ValueError("radial_profile needs R >= 0")
    g = spec.k * (dawson(spec.s * R) / spec.s - R) + spec.perturb_f * R * R
    return float(g) if g.ndim == 0 else g


def radial_profile_derivative(spec: HamiltonianSpec, R):
    """g'(R) = -2 k x F(x) with x = s R."""
    _require_profile(spec, "radial_profile_derivative")
    R = np.asarray(R, dtype=float)
    x = spec.s * R
    dg = -2.0 * spec.k * x * dawson(x) + 2.0 * spec.perturb_f * R
    return float(dg) if dg.ndim == 0 else dg


def radial_profile_erfi(spec: HamiltonianSpec, R):
    """g(R) straight from the erfi form of the general solution.

    Independent of the Dawson evaluator; overflows for s R beyond ~26.
    """
    _require_profile(spec, "radial_profile_erfi")
    R = np.asarray(R, dtype=float)
    ap, bp = spec.a_prime0, spec.b_prime0
    g = (
        -(bp / ap) * R
        + math.sqrt(math.pi / 2.0) * bp * np.exp(-ap * R * R / 2.0) * sp.erfi(spec.s * R) / ap**1.5
        + spec.C * np.exp(-ap * R * R / 2.0)
        + spec.perturb_f * R * R
    )
    return float(g) if g.ndim == 0 else g


def ode_residual(spec: HamiltonianSpec, R):
    """f'(R) + (1/R + a'(0) R) f(R) + b'(0) R with f = g/R."""
    R = np.asarray(R, dtype=float)
    g = radial_profile(spec, R)
    dg = radial_profile_derivative(spec, R)
    f = g / R
    df = (dg - f) / R
    res = df + (1.0 / R + spec.a_prime0 * R) * f + spec.b_prime0 * R
    return float(res) if np.ndim(res) == 0 else res


# ---------------------------------------------------------------------------
# H in three presentations


def _phi_parts(spec: HamiltonianSpec, R, r):
    """phi(R, r) and phi_R / R, both finite at R = 0."""
    if spec.kind == "model_v":
        return np.ones_like(R), np.zeros_like(R)
    if spec.kind == "model_Rv":
        with np.errstate(divide="ignore", invalid="ignore"):
            return R.copy(), np.where(R > 0, 1.0 / np.where(R > 0, R, 1.0), 0.0)
    q, dq_over_x = dawson_ratio_parts(spec.s * R)
    a = spec.a(r)
    phi = a * spec.k * q + spec.b(r)
    phi_R_over_R = a * spec.k * spec.s**2 * dq_over_x
    if spec.perturb_f:
        phi = phi + a * spec.perturb_f * R
        with np.errstate(divide="ignore", invalid="ignore"):
            phi_R_over_R = phi_R_over_R + np.where(R > 0, a * spec.perturb_f / np.where(R > 0, R, 1.0), 0.0)
    return phi, phi_R_over_R


def _phi_r(spec: HamiltonianSpec, R, r):
    if spec.kind != "paper":
        return np.zeros_like(R)
    q, _ = dawson_ratio_parts(spec.s * R)
    out = spec.da(r) * spec.k * q + spec.db(r)
    if spec.perturb_f:
        out = out + spec.da(r) * spec.perturb_f * R
    return out


def hamiltonian_array(spec: HamiltonianSpec, u, v, r):
    """Vectorized Cartesian evaluation H = phi(R, r) v."""
    u, v, r = (np.asarray(c, dtype=float) for c in np.broadcast_arrays(u, v, r))
    R = np.hypot(u, v)
    phi, _ = _phi_parts(spec, R, r)
    return phi * v


def H_polar(spec: HamiltonianSpec, R: float, Theta: float, r: float) -> float:
    if spec.kind == "model_v":
        return R * math.sin(Theta)
    if spec.kind == "model_Rv":
        return R * R * math.sin(Theta)
    g = radial_profile(spec, R)
    return float((spec.a(r) * g + spec.b(r) * R) * math.sin(Theta))


def H_cartesian(spec: HamiltonianSpec, u: float, v: float, r: float) -> float:
    return float(hamiltonian_array(spec, u, v, r))


def H_complex(spec: HamiltonianSpec, w: complex, y: complex) -> float:
    """H(w, y) with r = -1/|y|, using the erfi route for the radial factor."""
    Rw = abs(w)
    r = -1.0 / abs(y)
    if spec.kind == "model_v":
        return w.imag
    if spec.kind == "model_Rv":
        return Rw * w.imag
    if Rw == 0.0:
        return 0.0
    if spec.s * Rw < 25.0:
        g = radial_profile_erfi(spec, Rw)
    else:
        g = radial_profile(spec, Rw)
    return float((spec.a(r) * g / Rw + spec.b(r)) * w.imag)


def H_presentations(spec: HamiltonianSpec, p: PhasePoint) -> dict[str, float]:
    out = {
        "polar": H_polar(spec, p.R, p.Theta, p.r),
        "cartesian": H_cartesian(spec, p.u, p.v, p.r),
    }
    if p.r < 0.0:
        out["complex"] = H_complex(spec, p.w, p.y)
    return out


def H_value(spec: HamiltonianSpec, p: PhasePoint, tol: float = 1e-12) -> float:
    """H at p; the polar, Cartesian and complex forms are cross-checked.

    The complex form is skipped on r = 0 where y is not a point of C*.
    """
    vals = H_presentations(spec, p)
    ref = vals["cartesian"]
    scale = max(1.0, abs(ref))
    for name, val in vals.items():
        if abs(val - ref) > tol * scale:
            raise PresentationMismatch(f"{name} form gives {val!r}, cartesian gives {ref!r} at {p}")
    return ref


# ---------------------------------------------------------------------------
# vector field


def vector_field_array(spec: HamiltonianSpec, state):
    """X_H at an (N, 4) array of (u, v, r, theta) states.

    du = phi + (phi_R/R) v^2,  dv = -(phi_R/R) u v,  dr = 0,  dtheta = -phi_r v.
    """
    state = np.asarray(state, dtype=float)
    u, v, r = state[..., 0], state[..., 1], state[..., 2]
    R = np.hypot(u, v)
    phi, phi_R_over_R = _phi_parts(spec, R, r)
    out = np.empty_like(state)
    out[..., 0] = phi + phi_R_over_R * v * v
    out[..., 1] = -phi_R_over_R * u * v
    out[..., 2] = 0.0
    out[..., 3] = -_phi_r(spec, R, r) * v
    return out


def X_H_closed(spec: HamiltonianSpec, p: PhasePoint) -> TangentVector:
    """Closed-form Hamiltonian vector field; smooth through w = 0."""
    return TangentVector.from_array(vector_field_array(spec, p.as_array()[None, :])[0])


def gradient_fd(spec: HamiltonianSpec, p: PhasePoint, h: float = 1e-6) -> np.ndarray:
    """Central-difference dH in (u, v, r, theta); r never steps past 0."""
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    x = p.as_array()
    grad = np.empty(4)
    for i in range(4):
        hi = lo = h
        xp, xm = x.copy(), x.copy()
        if i == 2 and x[2] + h > 0.0:
            # one-sided second-order stencil at the r = 0 boundary
            f0 = _H_at(spec, x)
            xm[2] -= h
            xmm = x.copy()
            xmm[2] -= 2 * h
            grad[i] = (3 * f0 - 4 * _H_at(spec, xm) + _H_at(spec, xmm)) / (2 * h)
            continue
        xp[i] += hi
        xm[i] -= lo
        grad[i] = (_H_at(spec, xp) - _H_at(spec, xm)) / (hi + lo)
    return grad


def _H_at(spec: HamiltonianSpec, x) -> float:
    # H does not depend on theta; the theta slot is carried for completeness
    return float(hamiltonian_array(spec, x[0], x[1], x[2]))


def X_H_from_omega(spec: HamiltonianSpec, p: PhasePoint, h: float = 1e-6) -> TangentVector:
    """Solve omega(X, .) = dH with dH from central finite differences."""
    grad = gradient_fd(spec, p, h)
    X = np.linalg.solve(OMEGA.T, grad)
    return TangentVector.from_array(X)


def rotation_condition_residual(spec: HamiltonianSpec, R: float, Theta: float) -> float:
    """(1/R) dH/dR + dH/dr at r = 0."""
    if not R > 0:
        raise ValueError("rotation condition is stated for R > 0")
    s = math.sin(Theta)
    if spec.kind == "model_v":
        return s / R
    if spec.kind == "model_Rv":
        return 2.0 * s
    g = radial_profile(spec, R)
    dg = radial_profile_derivative(spec, R)
    a0, b0 = float(spec.a(0.0)), float(spec.b(0.0))
    H_R = (a0 * dg + b0) * s
    H_r = (float(spec.da(0.0)) * g + float(spec.db(0.0)) * R) * s
    return H_R / R + H_r
