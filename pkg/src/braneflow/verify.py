"""Invariant suite run by ``braneflow verify``.

Every check takes the Hamiltonian spec under test and returns (passed, detail).
Checks use fixed seeds so the table is reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from . import config as config_mod
from .branes import (
    U_TANGENT_FRAME,
    TargetBrane,
    evolve_cloud,
    make_U,
    seed_semicircles,
    theta_gap,
    window_metrics,
)
from .coords import PhasePoint, TangentVector, from_complex, omega, stop_angle, to_complex
from .flow import IntegratorConfig, integrate_batch, spec_field, spec_monitor
from .hamiltonian import (
    H_presentations,
    HamiltonianSpec,
    X_H_closed,
    X_H_from_omega,
    hamiltonian_array,
    ode_residual,
    radial_profile,
    rotation_condition_residual,
    vector_field_array,
)
from .special import dawson
from .ss_model import SurfacePoint, ss_flow, ss_flow_array, ss_vector_field


@dataclass
class CheckResult:
    module: str
    name: str
    passed: bool
    detail: str
    seconds: float


def _rng():
    return np.random.default_rng(20240917)


def _random_points(n, r_lo=-10.0, r_hi=-1e-3, box=3.0, rng=None):
    rng = rng or _rng()
    return [
        PhasePoint(rng.uniform(-box, box), rng.uniform(-box, box), rng.uniform(r_lo, r_hi), rng.uniform(-math.pi, math.pi))
        for _ in range(n)
    ]


def _random_vector(rng):
    return TangentVector(*rng.normal(size=4))


# -- coords ------------------------------------------------------------------


def chart_round_trip(spec):
    worst = 0.0
    for p in _random_points(1000):
        q = from_complex(*to_complex(p))
        worst = max(worst, float(np.max(np.abs(q.as_array() - p.as_array()))))
    return worst < 1e-12, f"max error {worst:.2e}"


def omega_antisymmetry(spec):
    rng = _rng()
    ok = True
    for p in _random_points(100, rng=rng):
        A, B = _random_vector(rng), _random_vector(rng)
        ok &= omega.real(p, A, B) == -omega.real(p, B, A)
    return ok, "exact sign flip"


def omega_charts_agree(spec):
    rng = _rng()
    worst = 0.0
    for p in _random_points(100, rng=rng):
        A, B = _random_vector(rng), _random_vector(rng)
        worst = max(worst, abs(omega.real(p, A, B) - omega.complex_chart(p, A, B)))
    return worst < 1e-10, f"max |real - complex| {worst:.2e}"


def stop_wrap_invariance(spec):
    rng = _rng()
    worst = 0.0
    for T in rng.uniform(-10, 10, 200):
        d = abs(stop_angle(T + 2 * math.pi) - stop_angle(T))
        worst = max(worst, min(d, 2 * math.pi - d))
    return worst < 1e-12, f"max circular difference {worst:.2e}"


# -- hamiltonian -------------------------------------------------------------


def dawson_vs_quadrature(spec):
    mpmath.mp.dps = 30
    worst = 0.0
    for R in np.linspace(0.01, 12, 60):
        x = mpmath.mpf(float(R))
        ref = float(mpmath.quad(lambda a: mpmath.exp(a * a - x * x), [0, x]))
        worst = max(worst, abs(dawson(R) - ref) / ref)
    return worst < 1e-11, f"max relative error {worst:.2e}"


def dawson_identity(spec):
    R = np.linspace(0.0, 10.0, 401)[1:-1]
    h = 1e-5
    fd = (dawson(R + h) - dawson(R - h)) / (2 * h)
    err = float(np.max(np.abs(fd - (1 - 2 * R * dawson(R)))))
    return err < 1e-9, f"max |F' - (1 - 2RF)| {err:.2e}"


def radial_ode(spec):
    if spec.kind != "paper":
        return True, "n/a for model kinds"
    R = np.geomspace(1e-3, 10, 200)
    res = float(np.max(np.abs(ode_residual(spec, R))))
    return res < 1e-8, f"max residual {res:.2e}"


def rotation_condition(spec):
    worst = max(
        abs(rotation_condition_residual(spec, R, T)) for R in np.geomspace(0.01, 10, 25) for T in np.linspace(0.1, 3.0, 7)
    )
    return worst < 1e-9, f"max residual {worst:.2e}"


def profile_at_origin(spec):
    if spec.kind != "paper":
        return True, "n/a for model kinds"
    g = abs(radial_profile(spec, 1e-8))
    return g < 1e-12, f"f(R)R at R=1e-8: {g:.2e}"


def three_presentations(spec):
    worst = 0.0
    for p in _random_points(1000):
        vals = list(H_presentations(spec, p).values())
        worst = max(worst, max(vals) - min(vals))
    return worst < 1e-12, f"max spread {worst:.2e}"


def field_vs_omega_dual(spec):
    worst = 0.0
    rng = _rng()
    n = 0
    while n < 1000:
        p = PhasePoint(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-5, 0), rng.uniform(-math.pi, math.pi))
        if p.R <= 1e-3:
            continue
        a, b = X_H_closed(spec, p).as_array(), X_H_from_omega(spec, p, 1e-6).as_array()
        worst = max(worst, np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-300))
        n += 1
    return worst < 1e-6, f"max relative error {worst:.2e}"


def stop_compatibility(spec):
    rng = _rng()
    u = rng.uniform(-3, 3, 2000)
    v = rng.uniform(-3, 3, 2000)
    keep = np.hypot(u, v) > 1e-3
    u, v = u[keep], v[keep]
    X = vector_field_array(spec, np.stack([u, v, np.zeros_like(u), -np.arctan2(v, u)], 1))
    dTheta = (u * X[:, 1] - v * X[:, 0]) / (u * u + v * v)
    err = float(np.max(np.abs(dTheta + X[:, 3])))
    return err < 1e-10, f"max |d(theta + Theta)/dt| {err:.2e}"


def odd_symmetry(spec):
    rng = _rng()
    s = np.stack([rng.uniform(-3, 3, 500), rng.uniform(-3, 3, 500), rng.uniform(-5, 0, 500), rng.uniform(-3, 3, 500)], 1)
    m = s * np.array([1, -1, 1, -1])
    H, Hm = hamiltonian_array(spec, s[:, 0], s[:, 1], s[:, 2]), hamiltonian_array(spec, m[:, 0], m[:, 1], m[:, 2])
    X, Xm = vector_field_array(spec, s), vector_field_array(spec, m)
    ok = np.all(Hm == -H) and np.all(Xm[:, 0] == X[:, 0]) and np.all(Xm[:, 1] == -X[:, 1]) and np.all(Xm[:, 3] == -X[:, 3])
    return bool(ok), "H odd; du even, dv and dtheta odd (exact)"


def origin_limit(spec):
    if spec.kind != "paper":
        return True, "n/a for model kinds"
    worst = 0.0
    for eps in np.geomspace(1e-6, 1e-2, 9):
        for r in (0.0, -1.0, -5.0):
            X = X_H_closed(spec, PhasePoint(eps, 0.0, r, 0.0)).as_array()
            expected = np.array([-math.expm1(r), 0, 0, 0])
            worst = max(worst, np.linalg.norm(X - expected) / eps)
    return worst < 10, f"max |X - (1-e^r)d_u| / eps {worst:.2e}"


# -- flow --------------------------------------------------------------------


def _flow_batch(spec, tol=1e-10, n=100, t_end=10.0, seed=7):
    rng = np.random.default_rng(seed)
    y0 = np.stack([rng.uniform(-2, 2, n), rng.uniform(-2, 2, n), rng.uniform(-3, 0, n), rng.uniform(-3, 3, n)], 1)
    cfg = IntegratorConfig(rel_tol=tol, abs_tol=tol, t_end=t_end, snapshot_times=np.linspace(0, t_end, 11))
    return y0, integrate_batch(spec_field(spec), y0, cfg, monitor=spec_monitor(spec))


def r_conservation(spec):
    _, res = _flow_batch(spec)
    d = float(np.max(res.r_drift))
    return d < 1e-12, f"max r drift {d:.2e}"


def H_conservation(spec):
    _, res = _flow_batch(spec)
    d = float(np.max(res.H_drift))
    return d < 1e-8 and not res.failed.any(), f"max H drift {d:.2e}"


def mirror_equivariance(spec):
    y0, res = _flow_batch(spec, n=50)
    sigma = np.array([1, -1, 1, -1])
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-10, t_end=10.0, snapshot_times=np.linspace(0, 10, 11))
    res_m = integrate_batch(spec_field(spec), y0 * sigma, cfg)
    err = float(np.nanmax(np.abs(res_m.states - res.states * sigma)))
    return err < 1e-8, f"max mirror mismatch {err:.2e}"


def stop_preservation(spec):
    from .flow import stop_preservation_check

    worst = max(stop_preservation_check(spec, T, R, 10.0) for T in (math.pi / 4, math.pi / 2, 2.5) for R in (0.5, 1.0, 2.0))
    return worst < 1e-6, f"max |theta + Theta| {worst:.2e}"


def tolerance_ladder(spec):
    drifts = []
    for tol in (1e-6, 1e-9, 1e-12):
        _, res = _flow_batch(spec, tol=tol, n=20)
        drifts.append(float(np.max(res.H_drift)))
    ok = drifts[0] > drifts[1] > drifts[2]
    return ok, "H drift " + " > ".join(f"{d:.1e}" for d in drifts)


def dense_output(spec):
    rng = np.random.default_rng(3)
    y0 = np.stack([rng.uniform(-2, 2, 20), rng.uniform(-2, 2, 20), rng.uniform(-3, 0, 20), np.zeros(20)], 1)
    tol = 1e-9
    snaps = [1.3, 4.7, 7.1]
    dense = integrate_batch(spec_field(spec), y0, IntegratorConfig(rel_tol=tol, abs_tol=tol, t_end=10.0, snapshot_times=snaps))
    worst = 0.0
    for i, t in enumerate(snaps):
        fresh = integrate_batch(spec_field(spec), y0, IntegratorConfig(rel_tol=tol, abs_tol=tol, t_end=t, snapshot_times=[t]))
        scale = tol + tol * np.abs(fresh.states[0])
        worst = max(worst, float(np.max(np.abs(dense.states[i] - fresh.states[0]) / scale)))
    return worst < 100, f"max deviation {worst:.1f} x local tolerance"


# -- branes ------------------------------------------------------------------


def U_lagrangian(spec):
    cloud = make_U(1.0, np.linspace(-1, 1, 5), np.linspace(-1, 0, 5))
    A, B = (TangentVector.from_array(e) for e in U_TANGENT_FRAME)
    vals = [omega.real(p, A, B) for p in cloud.points]
    return all(v == 0.0 for v in vals), "omega(d_v, d_r) = 0 on every cloud point"


def cloud_conservation(spec):
    cloud = seed_semicircles(1.0, [0.5, 0.25], 17)
    ev = evolve_cloud(spec, cloud, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-10, t_end=5.0, snapshot_times=[0, 2.5, 5.0]))
    r_err = max(float(np.max(np.abs(c.states[:, 2] - cloud.r0))) for _, c in ev.snapshots)
    st = ev.snapshots[-1][1].states
    v0 = cloud.v0
    mirror_err = 0.0
    for i in range(len(cloud)):
        j = np.nonzero((cloud.eps == cloud.eps[i]) & (v0 == -v0[i]) & (cloud.r0 == cloud.r0[i]))[0][0]
        mirror_err = max(mirror_err, float(np.max(np.abs(st[j] - st[i] * np.array([1, -1, 1, -1])))))
    return r_err < 1e-12 and mirror_err < 1e-8, f"r drift {r_err:.1e}, mirror mismatch {mirror_err:.1e}"


def gap_rotation_invariance(spec):
    rng = _rng()
    th = rng.uniform(-math.pi, math.pi, 40)
    worst = max(abs(theta_gap(th + c) - theta_gap(th)) for c in rng.uniform(-10, 10, 20))
    return worst < 1e-12, f"max change {worst:.1e}"


def hausdorff_identity(spec):
    from .branes import BraneCloud

    target = TargetBrane((0.5, 1.5), m=32, n_u=11)
    pts = target.samples()
    n = len(pts)
    cloud = BraneCloud(pts, v0=np.zeros(n), r0=np.zeros(n), arc_angle=np.full(n, np.nan), eps=np.full(n, np.nan))
    m = window_metrics(cloud, target, (0.5, 1.5))
    ok = m.offset == 0 and m.hausdorff <= target.pitch() and m.theta_gap <= 2 * math.pi / 32 + 1e-12
    return ok, f"offset {m.offset}, hausdorff {m.hausdorff:.1e}, gap {m.theta_gap:.3f}"


# -- ss_model ----------------------------------------------------------------


def _ss_points(n=200):
    rng = _rng()
    return [SurfacePoint(complex(*rng.normal(size=2)), complex(*rng.normal(size=2))) for _ in range(n)]


def ss_group_law(spec):
    worst = 0.0
    for p in _ss_points():
        a = ss_flow(ss_flow(p, 0.7), 1.1)
        b = ss_flow(p, 1.8)
        worst = max(worst, abs(a.x - b.x) + abs(a.y - b.y))
    return worst < 1e-10, f"max error {worst:.1e}"


def ss_conservation(spec):
    im_err, mono = 0.0, True
    ts = np.linspace(0, 3, 31)
    for p in _ss_points():
        x, y = ss_flow_array(p.x, p.y, ts)
        w = x * y
        im_err = max(im_err, float(np.max(np.abs(w.imag - p.w.imag))))
        mono &= bool(np.all(np.diff(w.real) >= -1e-12))
    return im_err < 1e-12 and mono, f"Im(w) drift {im_err:.1e}, Re(w) monotone {mono}"


def ss_invariant_loci(spec):
    rng = _rng()
    worst = 0.0
    for _ in range(100):
        x = complex(*rng.normal(size=2))
        for sign in (1, -1):
            p = SurfacePoint(x, sign * x.conjugate())
            q = ss_flow(p, 2.0)
            worst = max(worst, abs(q.y - sign * q.x.conjugate()) / max(1.0, abs(q.x)))
    return worst < 1e-12, f"max locus residual {worst:.1e}"


def ss_flow_fd(spec):
    worst, dt = 0.0, 1e-5
    for p in _ss_points(50):
        a, b = ss_flow(p, 0.5 + dt), ss_flow(p, 0.5 - dt)
        q = ss_flow(p, 0.5)
        fx, fy = ss_vector_field(q)
        worst = max(worst, abs((a.x - b.x) / (2 * dt) - fx) + abs((a.y - b.y) / (2 * dt) - fy))
    return worst < 1e-8, f"max derivative mismatch {worst:.1e}"


# -- config ------------------------------------------------------------------


def config_round_trip(spec):
    cfg = config_mod.RunConfig(u_star=1.25, converge_times=(1.0, 3.5), formats=("csv",))
    again = config_mod.parse(config_mod.serialize(cfg))
    return again == cfg, "parse(serialize(cfg)) == cfg"


CHECKS: list[tuple[str, str, Callable]] = [
    ("coords", "chart_round_trip", chart_round_trip),
    ("coords", "omega_antisymmetry", omega_antisymmetry),
    ("coords", "omega_charts_agree", omega_charts_agree),
    ("coords", "stop_wrap_invariance", stop_wrap_invariance),
    ("hamiltonian", "dawson_vs_quadrature", dawson_vs_quadrature),
    ("hamiltonian", "dawson_identity", dawson_identity),
    ("hamiltonian", "ode_residual", radial_ode),
    ("hamiltonian", "rotation_condition", rotation_condition),
    ("hamiltonian", "profile_at_origin", profile_at_origin),
    ("hamiltonian", "three_presentations", three_presentations),
    ("hamiltonian", "field_vs_omega_dual", field_vs_omega_dual),
    ("hamiltonian", "stop_compatibility", stop_compatibility),
    ("hamiltonian", "odd_symmetry", odd_symmetry),
    ("hamiltonian", "origin_limit", origin_limit),
    ("flow", "r_conservation", r_conservation),
    ("flow", "H_conservation", H_conservation),
    ("flow", "mirror_equivariance", mirror_equivariance),
    ("flow", "stop_preservation", stop_preservation),
    ("flow", "tolerance_ladder", tolerance_ladder),
    ("flow", "dense_output", dense_output),
    ("branes", "U_lagrangian", U_lagrangian),
    ("branes", "cloud_conservation", cloud_conservation),
    ("branes", "gap_rotation_invariance", gap_rotation_invariance),
    ("branes", "hausdorff_identity", hausdorff_identity),
    ("ss_model", "group_law", ss_group_law),
    ("ss_model", "conservation", ss_conservation),
    ("ss_model", "invariant_loci", ss_invariant_loci),
    ("ss_model", "flow_finite_difference", ss_flow_fd),
    ("cli_io", "config_round_trip", config_round_trip),
]


def run_checks(spec: HamiltonianSpec | None = None, only: list[str] | None = None) -> list[CheckResult]:
    spec = spec or HamiltonianSpec.paper()
    results = []
    for module, name, fn in CHECKS:
        if only and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn(spec)
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(module, name, bool(passed), detail, time.perf_counter() - t0))
    return results
