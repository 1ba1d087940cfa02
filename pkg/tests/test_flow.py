import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from braneflow.coords import PhasePoint
from braneflow.flow import (
    CAPPED,
    FROZEN,
    NONFINITE,
    OK,
    UNDERFLOW,
    IntegratorConfig,
    NonFiniteStateError,
    StepUnderflowError,
    field_grid,
    integrate,
    integrate_batch,
    spec_field,
    spec_monitor,
    stop_preservation_check,
)
from braneflow.hamiltonian import HamiltonianSpec, vector_field_array

PAPER = HamiltonianSpec.paper()
TIGHT = dict(rel_tol=1e-10, abs_tol=1e-10)


def oscillator(y):
    return np.stack([y[:, 1], -y[:, 0]], axis=1)


# -- integrator on problems with exact solutions ----------------------------


def test_oscillator_exact():
    y0 = np.array([[1.0, 0.0], [0.0, 2.0]])
    ts = np.linspace(0, 10, 11)
    res = integrate_batch(oscillator, y0, IntegratorConfig(**TIGHT, t_end=10, snapshot_times=ts))
    exact0 = np.stack([np.cos(ts), -np.sin(ts)], 1)
    exact1 = np.stack([2 * np.sin(ts), 2 * np.cos(ts)], 1)
    assert np.max(np.abs(res.states[:, 0] - exact0)) < 1e-8
    assert np.max(np.abs(res.states[:, 1] - exact1)) < 1e-8
    assert np.all(res.status == OK)


def test_exponential_dense_output_between_steps():
    cfg = IntegratorConfig(rel_tol=1e-7, abs_tol=1e-7, t_end=3.0, max_step=3.0, snapshot_times=np.linspace(0, 3, 61))
    res = integrate_batch(lambda y: -y, np.array([[1.0, 0.0, 0.0, 0.0]]), cfg)
    assert res.steps[0] < 60  # snapshots come from interpolation, not from forced steps
    np.testing.assert_allclose(res.states[:, 0, 0], np.exp(-cfg.snapshot_times), rtol=1e-6)


def test_convergence_order():
    # global error drops roughly like tol when the tolerance is tightened
    errs = []
    for tol in (1e-5, 1e-8):
        res = integrate_batch(oscillator, np.array([[1.0, 0.0]]), IntegratorConfig(rel_tol=tol, abs_tol=tol, t_end=5, snapshot_times=[5.0]))
        errs.append(abs(res.states[0, 0, 0] - math.cos(5)))
    assert errs[1] < errs[0] / 100


def test_per_point_end_times_and_order_independence():
    y0 = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    cfg = IntegratorConfig(**TIGHT, t_end=4.0, snapshot_times=[1.0, 2.0, 4.0])
    res = integrate_batch(oscillator, y0, cfg, t_end=np.array([4.0, 2.0, 4.0]))
    assert np.isnan(res.states[2, 1]).all()  # never reached t = 4
    rev = integrate_batch(oscillator, y0[::-1], cfg, t_end=np.array([4.0, 2.0, 4.0]))
    np.testing.assert_array_equal(rev.states[:2], res.states[:2, ::-1])


def test_snapshot_at_zero_and_end_exact():
    y0 = np.array([[0.3, -0.2, -0.7, 0.1]])
    res = integrate_batch(spec_field(PAPER), y0, IntegratorConfig(**TIGHT, t_end=2.0, snapshot_times=[0.0, 2.0]))
    np.testing.assert_array_equal(res.states[0, 0], y0[0])
    fresh = integrate_batch(spec_field(PAPER), y0, IntegratorConfig(**TIGHT, t_end=2.0, snapshot_times=[]))
    assert np.all(np.isfinite(res.states[1, 0]))
    assert fresh.steps[0] == res.steps[0]


def test_failure_flags():
    blowup = integrate_batch(lambda y: y**2, np.array([[1.0], [-1.0]]), IntegratorConfig(t_end=2.0, min_step=1e-9))
    assert blowup.status[0] in (UNDERFLOW, NONFINITE)
    assert blowup.status[1] == OK
    assert 0.9 < blowup.fail_time[0] <= 1.0
    capped = integrate_batch(oscillator, np.array([[1.0, 0.0]]), IntegratorConfig(t_end=100.0, max_steps=10))
    assert capped.status[0] == CAPPED


def test_nonfinite_raised_by_integrate():
    spec = HamiltonianSpec.paper()
    with pytest.raises((NonFiniteStateError, StepUnderflowError)):
        cfg = IntegratorConfig(t_end=1.0, max_steps=5)
        integrate(spec, PhasePoint(0.1, 0.2, -0.5, 0.0), cfg)


def test_freeze_keeps_state():
    y0 = np.array([[0.0, 1.0], [0.0, 0.0]])
    field = lambda y: np.stack([np.ones(len(y)), np.zeros(len(y))], 1)  # noqa: E731
    cfg = IntegratorConfig(t_end=5.0, snapshot_times=[1.0, 5.0])
    res = integrate_batch(field, y0, cfg, freeze=lambda y: (y[:, 0] > 2.0) & (y[:, 1] > 0.5))
    assert res.status[0] == FROZEN and res.status[1] == OK
    assert 2.0 < res.states[1, 0, 0] < 2.6  # last state kept in later snapshots
    assert res.states[1, 1, 0] == pytest.approx(5.0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(rel_tol=0), dict(abs_tol=-1), dict(min_step=1.0, max_step=0.5), dict(t_end=-1), dict(snapshot_times=[2.0, 1.0])],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)


# -- Hamiltonian flow -------------------------------------------------------


def test_matches_independent_integrator():
    p = PhasePoint(-1.0, 0.3, -0.2, 0.0)
    traj = integrate(PAPER, p, IntegratorConfig(**TIGHT, t_end=6.0))
    ref = solve_ivp(lambda t, y: vector_field_array(PAPER, y), (0, 6), p.as_array(), method="DOP853", rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(traj.states[-1], ref.y[:, -1], atol=1e-8)


def test_trajectory_record():
    p = PhasePoint(0.2, 0.5, -1.0, 3.0)
    traj = integrate(PAPER, p, IntegratorConfig(**TIGHT, t_end=4.0, snapshot_times=[1.0, 2.0]), theta_lift0=3.0 + 2 * math.pi)
    ts = [s[0] for s in traj.samples]
    assert ts == [0.0, 1.0, 2.0, 4.0]
    assert traj.samples[0][2] == pytest.approx(3.0 + 2 * math.pi)
    assert -math.pi < traj.final.theta <= math.pi
    assert traj.stats.steps > 0


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 0), st.floats(-3, 3))
def test_conservation(u, v, r, th):
    traj = integrate(PAPER, PhasePoint(u, v, r, th), IntegratorConfig(**TIGHT, t_end=10.0))
    assert traj.stats.r_drift < 1e-13
    assert traj.stats.H_drift < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 0), st.floats(-3, 3))
def test_mirror_equivariance(u, v, r, th):
    cfg = IntegratorConfig(**TIGHT, t_end=10.0, snapshot_times=[2.5, 5.0, 7.5])
    a = integrate(PAPER, PhasePoint(u, v, r, th), cfg).states
    b = integrate(PAPER, PhasePoint(u, -v, r, -th), cfg, theta_lift0=-th).states
    a0 = a.copy()
    a0[:, 3] = a[:, 3] - a[0, 3] + th  # compare lifts, not wrapped input
    np.testing.assert_allclose(b * [1, -1, 1, -1], a0, atol=1e-8)


def test_tolerance_ladder():
    y0 = np.random.default_rng(1).uniform(-2, 0, size=(20, 4))
    drifts = [
        np.max(integrate_batch(spec_field(PAPER), y0, IntegratorConfig(rel_tol=t, abs_tol=t, t_end=10), monitor=spec_monitor(PAPER)).H_drift)
        for t in (1e-6, 1e-9, 1e-12)
    ]
    assert drifts[0] > drifts[1] > drifts[2]


def test_dense_output_agrees_with_fresh_runs():
    rng = np.random.default_rng(5)
    y0 = np.stack([rng.uniform(-2, 2, 10), rng.uniform(-2, 2, 10), rng.uniform(-3, 0, 10), np.zeros(10)], 1)
    tol = 1e-9
    dense = integrate_batch(spec_field(PAPER), y0, IntegratorConfig(rel_tol=tol, abs_tol=tol, t_end=8.0, snapshot_times=[2.2, 6.3]))
    for i, t in enumerate((2.2, 6.3)):
        fresh = integrate_batch(spec_field(PAPER), y0, IntegratorConfig(rel_tol=tol, abs_tol=tol, t_end=t, snapshot_times=[t]))
        # the global error of either run is a few local tolerances
        assert np.max(np.abs(dense.states[i] - fresh.states[0]) / (tol * (1 + np.abs(fresh.states[0])))) < 100


# -- stop preservation ------------------------------------------------------


def test_stop_preservation():
    assert stop_preservation_check(PAPER, math.pi / 2, 1.0, 10.0) < 1e-6


def test_stop_preservation_on_axis():
    assert stop_preservation_check(PAPER, 0.0, 1.0, 10.0) < 1e-12


def test_stop_preservation_negative_control():
    assert stop_preservation_check(HamiltonianSpec.model_Rv(), math.pi / 2, 1.0, 10.0) > 0.1


def test_stop_preservation_rejects_origin():
    with pytest.raises(ValueError):
        stop_preservation_check(PAPER, 1.0, 0.0, 1.0)


# -- field grid -------------------------------------------------------------


def test_field_grid_deep_fiber_uniform():
    g = field_grid(PAPER, -20.0, n=21)
    assert np.max(np.abs(g.du - 1)) < 1e-6 and np.max(np.abs(g.dv)) < 1e-6


@pytest.mark.parametrize("r", [0.0, -0.4, -2.0])
def test_field_grid_origin_and_mirror(r):
    g = field_grid(PAPER, r, n=21)
    c = 10
    assert g.du[c, c] == pytest.approx(-math.expm1(r), abs=1e-14) and g.dv[c, c] == 0
    np.testing.assert_allclose(g.dv[::-1], -g.dv, rtol=0, atol=1e-15)
    assert len(list(g.rows())) == 21 * 21


def test_field_grid_direction_at_minus_two():
    g = field_grid(PAPER, -2.0, n=21)
    assert np.max(np.abs(np.arctan2(g.dv, g.du))) < 0.15


def test_field_grid_validation():
    with pytest.raises(ValueError):
        field_grid(PAPER, 0.1)
    with pytest.raises(ValueError):
        field_grid(PAPER, -1.0, n=1)
