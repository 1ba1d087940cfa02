"""Point-cloud models of the branes U and J, semicircle seeding and metrics.

U is modelled locally as the flat Lagrangian {u = -u*, theta = 0} spanned by
(d/dv, d/dr). J over a window of the positive u-axis is the full fiber circle
{v = 0, r = 0}; its step under the stop is measure-zero and ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .coords import TWO_PI, PhasePoint, wrap_angle
from .flow import STATUS_NAMES, IntegratorConfig, integrate_batch, spec_field, spec_monitor
from .hamiltonian import HamiltonianSpec

TAG_ANGLES = {"a": 0.0, "b": math.pi / 4, "c": math.pi / 2, "d": 3 * math.pi / 4, "e": math.pi}


@dataclass
class BraneCloud:
    """Sampled Lagrangian. ``states`` columns are (u, v, r, theta_lift)."""

    states: np.ndarray
    v0: np.ndarray
    r0: np.ndarray
    arc_angle: np.ndarray  # nan when not seeded on an arc
    eps: np.ndarray  # nan when not seeded on an arc
    brane_id: str = "custom"
    tags: dict[str, list[int]] = field(default_factory=dict)
    valid: np.ndarray | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 4)
        n = len(self.states)
        for name in ("v0", "r0", "arc_angle", "eps"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"label {name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
        if self.valid is None:
            self.valid = np.ones(n, dtype=bool)
        if np.any(self.states[:, 2] > 0):
            raise ValueError("brane points must have r <= 0")

    def __len__(self):
        return len(self.states)

    @property
    def points(self) -> list[PhasePoint]:
        return [PhasePoint(*s) for s in self.states]

    @property
    def theta(self) -> np.ndarray:
        return wrap_angle(self.states[:, 3])

    def with_states(self, states, valid=None) -> "BraneCloud":
        return BraneCloud(
            states=states,
            v0=self.v0,
            r0=self.r0,
            arc_angle=self.arc_angle,
            eps=self.eps,
            brane_id=self.brane_id,
            tags=self.tags,
            valid=self.valid.copy() if valid is None else valid,
        )


def make_U(u_star: float, v_samples: Sequence[float], r_samples: Sequence[float]) -> BraneCloud:
    """Product cloud {(-u*, v, r, 0)}, tangent frame (d/dv, d/dr)."""
    if not u_star > 0:
        raise ValueError("u* must be positive")
    vs = np.asarray(v_samples, dtype=float)
    rs = np.asarray(r_samples, dtype=float)
    if np.any(rs > 0):
        raise ValueError("r samples must be <= 0")
    V, Rr = np.meshgrid(vs, rs, indexing="ij")
    V, Rr = V.ravel(), Rr.ravel()
    states = np.stack([np.full_like(V, -u_star), V, Rr, np.zeros_like(V)], axis=1)
    nan = np.full_like(V, np.nan)
    return BraneCloud(states, v0=V, r0=Rr, arc_angle=nan, eps=nan.copy(), brane_id="U")


U_TANGENT_FRAME = (np.array([0.0, 1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0, 0.0]))


def seed_semicircles(u_star: float, eps_list: Sequence[float], n_per_arc: int) -> BraneCloud:
    """Half-circles v^2 + r^2 = eps^2, r <= 0, on U around (-u*, 0, 0, 0).

    Arc angle alpha in [0, pi] maps to (v, r) = (eps cos alpha, -eps sin alpha):
    alpha = 0 and pi are the top points (r = 0), alpha = pi/2 is the axis point.
    Points whose alpha hits 0, pi/4, pi/2, 3pi/4, pi exactly are tagged a..e.
    """
    if n_per_arc < 3:
        raise ValueError("need at least 3 points per arc")
    eps_arr = np.asarray(eps_list, dtype=float)
    if np.any(eps_arr <= 0):
        raise ValueError("arc radii must be positive")
    j = np.arange(n_per_arc)
    alpha = math.pi * j / (n_per_arc - 1)
    cos_a, sin_a = np.cos(alpha), np.sin(alpha)
    # exact values where the grid lands on them
    cos_a[0], cos_a[-1], sin_a[0], sin_a[-1] = 1.0, -1.0, 0.0, 0.0
    if (n_per_arc - 1) % 2 == 0:
        mid = (n_per_arc - 1) // 2
        cos_a[mid], sin_a[mid] = 0.0, 1.0
    for jj in range(n_per_arc // 2):
        # enforce exact mirror pairs alpha <-> pi - alpha
        cos_a[n_per_arc - 1 - jj] = -cos_a[jj]
        sin_a[n_per_arc - 1 - jj] = sin_a[jj]

    V = (eps_arr[:, None] * cos_a[None, :]).ravel()
    Rr = (-eps_arr[:, None] * sin_a[None, :]).ravel()
    Rr[Rr == 0.0] = 0.0  # no negative zeros
    A = np.tile(alpha, len(eps_arr))
    E = np.repeat(eps_arr, n_per_arc)
    states = np.stack([np.full_like(V, -u_star), V, Rr, np.zeros_like(V)], axis=1)

    tags: dict[str, list[int]] = {name: [] for name in TAG_ANGLES}
    for name, ang in TAG_ANGLES.items():
        pos = ang / math.pi * (n_per_arc - 1)
        if abs(pos - round(pos)) < 1e-9:
            tags[name] = [k * n_per_arc + int(round(pos)) for k in range(len(eps_arr))]
    tags = {k: v for k, v in tags.items() if v}
    return BraneCloud(states, v0=V, r0=Rr, arc_angle=A, eps=E, brane_id="seedArcs", tags=tags)


def eps_ladder(k_max: int = 10, base: float = 2.0) -> list[float]:
    return [base ** (-k) for k in range(k_max + 1)]


@dataclass
class EvolveResult:
    snapshots: list[tuple[float, BraneCloud]]
    status: np.ndarray
    steps: np.ndarray
    H0: np.ndarray
    H_drift: np.ndarray

    @property
    def status_names(self) -> list[str]:
        return [STATUS_NAMES[int(s)] for s in self.status]


def evolve_cloud(
    spec: HamiltonianSpec,
    cloud: BraneCloud,
    cfg: IntegratorConfig,
    freeze_u: float | None = None,
) -> EvolveResult:
    """Flow every point of ``cloud`` to each of ``cfg.snapshot_times``.

    Points whose integration fails are marked invalid in later snapshots.
    ``freeze_u`` stops stepping points once u exceeds it; they keep their last
    state, which stays beyond ``freeze_u`` because du/dt > 0 out there.
    """
    times = list(cfg.snapshot_times) or [cfg.t_end]
    freeze = None
    if freeze_u is not None:
        freeze = lambda y: y[:, 0] > freeze_u  # noqa: E731
    monitor = spec_monitor(spec)
    H0 = monitor(cloud.states)
    res = integrate_batch(spec_field(spec), cloud.states, cfg, snapshot_times=times, monitor=monitor, freeze=freeze)

    snapshots = []
    for i, t in enumerate(res.times):
        states = res.states[i]
        valid = cloud.valid & np.all(np.isfinite(states), axis=1)
        failed_before = res.failed & (res.fail_time <= t)
        valid &= ~failed_before
        states = np.where(valid[:, None], states, np.nan)
        snapshots.append((float(t), cloud.with_states(states, valid)))
    return EvolveResult(snapshots=snapshots, status=res.status, steps=res.steps, H0=H0, H_drift=res.H_drift)


@dataclass
class TargetBrane:
    """J restricted to a window: {v = 0, r = 0, u in u_range, theta in S^1}."""

    u_range: tuple[float, float] = (0.5, 1.5)
    m: int = 64
    n_u: int = 41

    def __post_init__(self):
        lo, hi = self.u_range
        if not 0 <= lo < hi:
            raise ValueError("target u_range must satisfy 0 <= u_min < u_max")
        if self.m < 1 or self.n_u < 2:
            raise ValueError("target discretization too coarse")

    def samples(self, window=None) -> np.ndarray:
        lo, hi = window if window is not None else self.u_range
        us = np.linspace(lo, hi, self.n_u)
        thetas = wrap_angle(-math.pi + TWO_PI * (np.arange(self.m) + 1) / self.m)
        U, T = np.meshgrid(us, thetas, indexing="ij")
        U, T = U.ravel(), T.ravel()
        return np.stack([U, np.zeros_like(U), np.zeros_like(U), T], axis=1)

    def pitch(self, window=None) -> float:
        lo, hi = window if window is not None else self.u_range
        du = (hi - lo) / (self.n_u - 1)
        dth = 2 * math.sin(math.pi / self.m)
        return math.hypot(du, dth)


def embed(states: np.ndarray) -> np.ndarray:
    """Map (u, v, r, theta) to R^5 so Euclidean distance is the product metric
    sqrt(du^2 + dv^2 + dr^2 + (2 sin(dtheta/2))^2)."""
    return np.stack(
        [states[:, 0], states[:, 1], states[:, 2], np.cos(states[:, 3]), np.sin(states[:, 3])], axis=1
    )


def hausdorff(a_states: np.ndarray, b_states: np.ndarray) -> float:
    A, B = embed(a_states), embed(b_states)
    d_ab = cKDTree(B).query(A)[0].max()
    d_ba = cKDTree(A).query(B)[0].max()
    return float(max(d_ab, d_ba))


def theta_gap(theta) -> float:
    """Largest circular gap between the given angles (2 pi for < 2 points)."""
    th = np.sort(wrap_angle(np.asarray(theta, dtype=float)))
    if th.size < 2:
        return TWO_PI
    gaps = np.diff(th)
    wrap = TWO_PI - (th[-1] - th[0])
    return float(max(gaps.max(), wrap))


@dataclass
class WindowMetrics:
    offset: float | None
    theta_gap: float | None
    hausdorff: float | None
    n_points: int

    @property
    def defined(self) -> bool:
        return self.n_points > 0


def window_metrics(snapshot: BraneCloud, target: TargetBrane, window: tuple[float, float]) -> WindowMetrics:
    lo, hi = window
    t_lo, t_hi = target.u_range
    if lo < t_lo or hi > t_hi or lo >= hi:
        raise ValueError(f"window {window} must lie inside target range {target.u_range}")
    s = snapshot.states
    inside = snapshot.valid & (s[:, 0] >= lo) & (s[:, 0] <= hi)
    pts = s[inside]
    if len(pts) == 0:
        return WindowMetrics(None, None, None, 0)
    offset = float(np.max(np.hypot(pts[:, 1], pts[:, 2])))
    gap = theta_gap(pts[:, 3])
    dist = hausdorff(pts, target.samples(window))
    return WindowMetrics(offset, gap, dist, int(len(pts)))


@dataclass
class ConvergenceReport:
    times: list[float]
    offset: list[float | None]
    theta_gap: list[float | None]
    hausdorff: list[float | None]
    n_in_window: list[int]
    window: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "times": list(self.times),
            "offset": list(self.offset),
            "theta_gap": list(self.theta_gap),
            "hausdorff": list(self.hausdorff),
            "n_in_window": list(self.n_in_window),
            "window": list(self.window),
        }


def convergence_run(
    spec: HamiltonianSpec,
    u_star: float,
    eps_list: Sequence[float],
    n_per_arc: int,
    window: tuple[float, float],
    times: Sequence[float],
    cfg: IntegratorConfig | None = None,
    target: TargetBrane | None = None,
) -> ConvergenceReport:
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("report times must be increasing")
    base = cfg or IntegratorConfig(rel_tol=1e-9, abs_tol=1e-9)
    run_cfg = IntegratorConfig(
        rel_tol=base.rel_tol,
        abs_tol=base.abs_tol,
        max_step=base.max_step,
        min_step=base.min_step,
        t_end=times[-1],
        snapshot_times=times,
        max_steps=base.max_steps,
    )
    target = target or TargetBrane(u_range=tuple(window))
    cloud = seed_semicircles(u_star, eps_list, n_per_arc)
    evolved = evolve_cloud(spec, cloud, run_cfg, freeze_u=window[1] + 10.0)
    rep = ConvergenceReport([], [], [], [], [], tuple(window))
    for t, snap in evolved.snapshots:
        m = window_metrics(snap, target, window)
        rep.times.append(t)
        rep.offset.append(m.offset)
        rep.theta_gap.append(m.theta_gap)
        rep.hausdorff.append(m.hausdorff)
        rep.n_in_window.append(m.n_points)
    return rep


@dataclass
class OvershootReport:
    times: list[float]
    theta: dict[str, list[float]]  # tag -> theta lift per time
    overshoot_times: list[float]
    reconverged: bool

    @property
    def overshoot_observed(self) -> bool:
        return bool(self.overshoot_times)


def overshoot_diagnostic(snapshots: Sequence[tuple[float, BraneCloud]], labels: dict[str, int] | None = None) -> OvershootReport:
    """Compare accumulated fiber rotation of quarter-arc points (b, d) with the
    arc endpoints (a, e) at the top of the fiber.

    ``labels`` maps tag -> point index; default is the first arc's tags.
    """
    if not snapshots:
        raise ValueError("no snapshots given")
    if labels is None:
        tags = snapshots[0][1].tags
        missing = [k for k in TAG_ANGLES if k not in tags]
        if missing:
            raise ValueError(f"seeding lacks tagged points {missing}; use (n_per_arc - 1) divisible by 4")
        labels = {k: tags[k][0] for k in TAG_ANGLES}
    missing = [k for k in TAG_ANGLES if k not in labels]
    if missing:
        raise ValueError(f"missing labels {missing}")
    times, theta = [], {k: [] for k in TAG_ANGLES}
    overshoot = []
    for t, cloud in snapshots:
        times.append(float(t))
        for k, i in labels.items():
            theta[k].append(float(cloud.states[i, 3]))
        if abs(theta["b"][-1]) > abs(theta["a"][-1]) or abs(theta["d"][-1]) > abs(theta["e"][-1]):
            overshoot.append(float(t))
    reconverged = abs(theta["b"][-1]) <= abs(theta["a"][-1]) and abs(theta["d"][-1]) <= abs(theta["e"][-1])
    return OvershootReport(times=times, theta=theta, overshoot_times=overshoot, reconverged=reconverged)


