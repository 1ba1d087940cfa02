"""Adaptive Dormand-Prince 5(4) integration of X_H with dense snapshots.

The integrator advances a whole batch of independent trajectories in lock-step,
each with its own step size, so a brane cloud costs one vectorized field
evaluation per stage rather than one Python call per point. theta is carried
as a continuous lift and wrapped only when reporting.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coords import PhasePoint, TangentVector, wrap_angle
from .hamiltonian import HamiltonianSpec, hamiltonian_array, vector_field_array

log = logging.getLogger(__name__)

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order minus embedded 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Shampine's quartic continuous extension, columns multiply theta^1..theta^4
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0

# per-point status codes
OK, UNDERFLOW, NONFINITE, CAPPED, FROZEN = 0, 1, 2, 3, 4
STATUS_NAMES = {OK: "ok", UNDERFLOW: "step_underflow", NONFINITE: "nonfinite", CAPPED: "step_cap", FROZEN: "frozen"}


class StepUnderflowError(RuntimeError):
    pass


class NonFiniteStateError(RuntimeError):
    pass


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = 0.5
    min_step: float = 1e-12
    t_end: float = 10.0
    snapshot_times: Sequence[float] = ()
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.min_step <= self.max_step:
            raise ValueError("need 0 < min_step <= max_step")
        if not self.t_end >= 0:
            raise ValueError("only forward integration is supported")
        ts = list(self.snapshot_times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot_times must be strictly increasing")
        if ts and (ts[0] < 0 or ts[-1] > self.t_end):
            raise ValueError("snapshot_times must lie in [0, t_end]")


@dataclass
class TrajectoryStats:
    H_drift: float
    r_drift: float
    steps: int
    rejected: int


@dataclass
class Trajectory:
    initial: PhasePoint
    times: np.ndarray
    states: np.ndarray  # (n, 4), theta column is the continuous lift
    stats: TrajectoryStats

    @property
    def samples(self) -> list[tuple[float, PhasePoint, float]]:
        return [
            (float(t), PhasePoint(s[0], s[1], s[2], s[3]), float(s[3])) for t, s in zip(self.times, self.states)
        ]

    @property
    def final(self) -> PhasePoint:
        s = self.states[-1]
        return PhasePoint(s[0], s[1], s[2], s[3])


@dataclass
class BatchResult:
    """Snapshots of a batch run; ``states[i, j]`` is point j at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    status: np.ndarray
    steps: np.ndarray
    rejected: np.ndarray
    H_drift: np.ndarray
    r_drift: np.ndarray
    fail_time: np.ndarray = field(default=None)

    @property
    def failed(self) -> np.ndarray:
        return np.isin(self.status, (UNDERFLOW, NONFINITE, CAPPED))


def _combine(coeffs, K):
    """sum_s coeffs[s] * K[s] in a fixed order, so that a point's result does
    not depend on which other points share the batch (BLAS kernels do)."""
    acc = None
    for c, k in zip(coeffs, K):
        if np.ndim(c) == 0 and c == 0:
            continue
        acc = c * k if acc is None else acc + c * k
    return np.zeros_like(K[0]) if acc is None else acc


def _initial_step(fun, t, y, f0, rtol, atol, max_step):
    # Hairer, Norsett & Wanner, starting step selection (vectorized)
    scale = atol + np.abs(y) * rtol
    d0 = np.sqrt(np.mean((y / scale) ** 2, axis=1))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2, axis=1))
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.where(d1 > 0, d1, 1.0))
    y1 = y + h0[:, None] * f0
    f1 = fun(y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2, axis=1)) / h0
    big = np.maximum(d1, d2)
    h1 = np.where(big <= 1e-15, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.where(big > 0, big, 1.0)) ** (1 / 5))
    return np.minimum(np.minimum(100 * h0, h1), max_step)


def integrate_batch(
    fun: Callable[[np.ndarray], np.ndarray],
    y0,
    cfg: IntegratorConfig,
    t_end=None,
    snapshot_times: Sequence[float] | None = None,
    monitor: Callable[[np.ndarray], np.ndarray] | None = None,
    freeze: Callable[[np.ndarray], np.ndarray] | None = None,
) -> BatchResult:
    """Integrate dy/dt = fun(y) for a batch of autonomous initial values.

    ``t_end`` may be per point. ``monitor`` is evaluated after every accepted
    step; its max deviation from the initial value is reported as H_drift.
    ``freeze`` marks points that stop stepping (their last state is kept).
    Failed points are flagged in ``status`` instead of raising.
    """
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim != 2:
        raise ValueError("y0 must have shape (n_points, dim)")
    n = y.shape[0]
    t_stop = np.broadcast_to(np.asarray(cfg.t_end if t_end is None else t_end, dtype=float), (n,)).copy()
    snaps = np.asarray(cfg.snapshot_times if snapshot_times is None else snapshot_times, dtype=float)
    n_snap = len(snaps)
    out = np.full((n_snap, n, y.shape[1]), np.nan)
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    t = np.zeros(n)
    status = np.zeros(n, dtype=int)
    steps = np.zeros(n, dtype=int)
    rejected = np.zeros(n, dtype=int)
    next_snap = np.zeros(n, dtype=int)
    fail_time = np.full(n, np.nan)
    r0 = y[:, 2].copy() if y.shape[1] > 2 else np.zeros(n)
    r_drift = np.zeros(n)
    H0 = monitor(y) if monitor is not None else None
    H_drift = np.zeros(n)

    # snapshots at t = 0
    while True:
        hit = next_snap < n_snap
        hit[hit] = snaps[next_snap[hit]] <= 0.0
        if not hit.any():
            break
        out[next_snap[hit], hit] = y[hit]
        next_snap[hit] += 1

    f = fun(y)
    bad = ~np.all(np.isfinite(f), axis=1)
    status[bad] = NONFINITE
    fail_time[bad] = 0.0
    h = _initial_step(fun, t, y, f, rtol, atol, cfg.max_step)
    h = np.clip(h, cfg.min_step, cfg.max_step)

    active = (t < t_stop) & (status == OK)
    if freeze is not None:
        fz = active & freeze(y)
        status[fz] = FROZEN
        active &= ~fz

    K = np.empty((7,) + y.shape)
    while active.any():
        idx = np.nonzero(active)[0]
        yi, ti, hi = y[idx], t[idx], h[idx]
        last = hi >= t_stop[idx] - ti
        hi = np.where(last, t_stop[idx] - ti, hi)
        Ki = K[:, : idx.size]
        Ki[0] = f[idx]
        for s in range(1, 6):
            Ki[s] = fun(yi + hi[:, None] * _combine(_A[s], Ki))
        y_new = yi + hi[:, None] * _combine(_B[:6], Ki)
        Ki[6] = fun(y_new)
        err_vec = hi[:, None] * _combine(_E, Ki)
        scale = atol + rtol * np.maximum(np.abs(yi), np.abs(y_new))
        with np.errstate(invalid="ignore", over="ignore"):
            err = np.sqrt(np.mean((err_vec / scale) ** 2, axis=1))
        finite = np.all(np.isfinite(y_new), axis=1) & np.all(np.isfinite(Ki[6]), axis=1) & np.isfinite(err)

        accept = finite & (err <= 1.0)
        with np.errstate(divide="ignore"):
            factor = np.where(err == 0, _MAX_FACTOR, _SAFETY * err ** (-1 / 5))
        factor = np.clip(factor, _MIN_FACTOR, _MAX_FACTOR)
        factor = np.where(accept, factor, np.minimum(factor, 1.0))
        factor = np.where(finite, factor, _MIN_FACTOR)
        # a step shortened to hit t_stop says nothing about the next step size
        h_next = np.minimum(np.where(last & accept, np.maximum(hi, h[idx]), hi) * factor, cfg.max_step)

        # dense-output snapshots inside accepted steps
        acc = idx[accept]
        if acc.size:
            ai = np.nonzero(accept)[0]
            t_new = np.where(last[ai], t_stop[acc], ti[ai] + hi[ai])
            while True:
                pend = next_snap[acc] < n_snap
                if not pend.any():
                    break
                ts = np.where(pend, snaps[np.minimum(next_snap[acc], n_snap - 1)], np.inf)
                inside = pend & (ts <= t_new)
                if not inside.any():
                    break
                sel = np.nonzero(inside)[0]
                theta = (ts[sel] - ti[ai[sel]]) / hi[ai[sel]]
                powers = theta[:, None] ** np.arange(1, 5)
                Q = (_P[:, None, :] * powers[None, :, :]).sum(axis=2)  # (7, m)
                Ksel = Ki[:, ai[sel]]
                interp = yi[ai[sel]] + hi[ai[sel], None] * _combine(Q[:, :, None], Ksel)
                # land exactly on the end state when the snapshot is the step end
                exact = ts[sel] == t_new[sel]
                interp[exact] = y_new[ai[sel][exact]]
                out[next_snap[acc[sel]], acc[sel]] = interp
                next_snap[acc[sel]] += 1

            y[acc] = y_new[ai]
            t[acc] = t_new
            f[acc] = Ki[6][ai]
            steps[acc] += 1
            if y.shape[1] > 2:
                r_drift[acc] = np.maximum(r_drift[acc], np.abs(y[acc, 2] - r0[acc]))
            if monitor is not None:
                H_drift[acc] = np.maximum(H_drift[acc], np.abs(monitor(y[acc]) - H0[acc]))
        rejected[idx[~accept]] += 1

        h[idx] = h_next
        nonfin = idx[~finite & (hi * _MIN_FACTOR < cfg.min_step)]
        under = idx[finite & ~accept & (h_next < cfg.min_step)]
        status[under] = UNDERFLOW
        status[nonfin] = NONFINITE
        fail_time[under] = t[under]
        fail_time[nonfin] = t[nonfin]
        h[idx] = np.maximum(h[idx], cfg.min_step)
        capped = idx[(steps[idx] + rejected[idx] >= cfg.max_steps) & (status[idx] == OK)]
        status[capped] = CAPPED
        fail_time[capped] = t[capped]

        active = (t < t_stop) & (status == OK)
        if freeze is not None and acc.size:
            fz = active & freeze(y)
            status[fz] = FROZEN
            active &= ~fz

    # frozen points keep their last state in the remaining snapshots
    for j in np.nonzero(status == FROZEN)[0]:
        out[next_snap[j]:, j] = y[j]
        next_snap[j] = n_snap

    return BatchResult(
        times=snaps,
        states=out,
        status=status,
        steps=steps,
        rejected=rejected,
        H_drift=H_drift,
        r_drift=r_drift,
        fail_time=fail_time,
    )


def spec_field(spec: HamiltonianSpec) -> Callable[[np.ndarray], np.ndarray]:
    return lambda y: vector_field_array(spec, y)


def spec_monitor(spec: HamiltonianSpec) -> Callable[[np.ndarray], np.ndarray]:
    return lambda y: hamiltonian_array(spec, y[:, 0], y[:, 1], y[:, 2])


def integrate(spec: HamiltonianSpec, p0: PhasePoint, cfg: IntegratorConfig, theta_lift0: float | None = None) -> Trajectory:
    """Integrate one trajectory of X_H from ``p0`` to ``cfg.t_end``.

    Samples are t = 0, the requested snapshot times and t_end.
    """
    y0 = p0.as_array()
    if theta_lift0 is not None:
        y0[3] = theta_lift0
    times = sorted({0.0, *map(float, cfg.snapshot_times), float(cfg.t_end)})
    res = integrate_batch(spec_field(spec), y0[None, :], cfg, snapshot_times=times, monitor=spec_monitor(spec))
    st = int(res.status[0])
    if st == UNDERFLOW:
        raise StepUnderflowError(
            f"step size fell below min_step={cfg.min_step} at t={res.fail_time[0]:.6g} from {p0}"
        )
    if st == NONFINITE:
        raise NonFiniteStateError(f"state became nonfinite at t={res.fail_time[0]:.6g} from {p0}")
    if st == CAPPED:
        raise StepUnderflowError(f"step cap {cfg.max_steps} reached at t={res.fail_time[0]:.6g} from {p0}")
    stats = TrajectoryStats(
        H_drift=float(res.H_drift[0]),
        r_drift=float(res.r_drift[0]),
        steps=int(res.steps[0]),
        rejected=int(res.rejected[0]),
    )
    return Trajectory(initial=p0, times=res.times, states=res.states[:, 0, :], stats=stats)


def stop_preservation_check(spec: HamiltonianSpec, Theta0: float, R0: float, t_end: float, cfg: IntegratorConfig | None = None) -> float:
    """Start on the stop over (R0, Theta0) and report the worst |theta + Theta| drift."""
    if not R0 > 0:
        raise ValueError("stops live over R > 0")
    cfg = cfg or IntegratorConfig(t_end=t_end)
    n_samples = 201
    run_cfg = IntegratorConfig(
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        max_step=cfg.max_step,
        min_step=cfg.min_step,
        t_end=t_end,
        snapshot_times=np.linspace(0.0, t_end, n_samples),
        max_steps=cfg.max_steps,
    )
    p0 = PhasePoint(R0 * math.cos(Theta0), R0 * math.sin(Theta0), 0.0, -Theta0)
    traj = integrate(spec, p0, run_cfg)
    s = traj.states
    resid = wrap_angle(s[:, 3] + np.arctan2(s[:, 1], s[:, 0]))
    return float(np.max(np.abs(resid)))


@dataclass
class FieldGrid:
    u: np.ndarray
    v: np.ndarray
    r: float
    du: np.ndarray
    dv: np.ndarray
    dtheta: np.ndarray
    speed: np.ndarray

    def rows(self):
        for i in range(self.u.size):
            yield (
                float(self.u.flat[i]),
                float(self.v.flat[i]),
                float(self.du.flat[i]),
                float(self.dv.flat[i]),
                float(self.speed.flat[i]),
            )

    def tangent(self, i: int, j: int) -> TangentVector:
        return TangentVector(float(self.du[i, j]), float(self.dv[i, j]), 0.0, float(self.dtheta[i, j]))


def field_grid(spec: HamiltonianSpec, r: float, bounds=(-2.0, 2.0, -2.0, 2.0), n: int = 21) -> FieldGrid:
    """Sample X_H on an n x n (u, v) grid at fixed r; arrays are indexed [iv, iu]."""
    if n < 2:
        raise ValueError("grid needs n >= 2")
    if r > 0:
        raise ValueError("r must be <= 0")
    u0, u1, v0, v1 = bounds
    U, V = np.meshgrid(np.linspace(u0, u1, n), np.linspace(v0, v1, n))
    state = np.stack([U, V, np.full_like(U, r), np.zeros_like(U)], axis=-1)
    X = vector_field_array(spec, state)
    du, dv = X[..., 0], X[..., 1]
    return FieldGrid(u=U, v=V, r=r, du=du, dv=dv, dtheta=X[..., 3], speed=np.hypot(du, dv))
