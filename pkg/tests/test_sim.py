"""Tests for the mission simulator: integrator, helpers, closed loop."""

import numpy as np
import pytest

from curveswarm import _sim_kernels as sk
from curveswarm.control import make_params
from curveswarm.curves import make_curve
from curveswarm.sim import (
    DT_MAX,
    MissionConfig,
    MissionError,
    TRAJECTORY_COLUMNS,
    distance_to_curve,
    initial_states,
    integrate_step,
    nearest_parameter,
    run_mission,
)

TWO_PI = 2.0 * np.pi


# -- integrator ---------------------------------------------------------------


def test_integrate_step_straight_line_exact():
    # constant-derivative dynamics: RK4 reproduces them exactly
    states = np.array([[0.0, 0.0, 0.0, 1.0, 2.0, 0.5]])
    controls = np.zeros((1, 3))
    out = integrate_step(states, controls, 0.02)
    assert out[0, 0] == pytest.approx(0.02, abs=1e-15)
    assert out[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert out[0, 4] == pytest.approx(2.0 + 0.5 * 0.02, abs=1e-15)


def test_integrate_step_linear_channels_exact():
    # psi, v, z, vz under constant controls are polynomial in t (degree
    # <= 2), which classical RK4 integrates without error
    states = np.array([[0.0, 0.0, 0.3, 0.0, 1.0, 0.2]])
    controls = np.array([[0.7, -0.4, 0.9]])
    dt = 0.02
    out = integrate_step(states, controls, dt)
    assert out[0, 2] == pytest.approx(0.3 - 0.4 * dt, rel=1e-14)
    assert out[0, 3] == pytest.approx(0.7 * dt, rel=1e-14)
    assert out[0, 4] == pytest.approx(1.0 + 0.2 * dt + 0.5 * 0.9 * dt * dt, rel=1e-14)
    assert out[0, 5] == pytest.approx(0.2 + 0.9 * dt, rel=1e-14)


def test_integrate_step_matches_turning_arc():
    # constant speed and turn rate trace a circular arc
    v, om, dt = 1.3, 0.8, 0.02
    states = np.array([[0.0, 0.0, 0.0, v, 0.0, 0.0]])
    controls = np.array([[0.0, om, 0.0]])
    st = states
    for _ in range(50):
        st = integrate_step(st, controls, dt)
    t = 50 * dt
    assert st[0, 0] == pytest.approx(v / om * np.sin(om * t), abs=1e-9)
    assert st[0, 1] == pytest.approx(v / om * (1.0 - np.cos(om * t)), abs=1e-9)
    assert st[0, 2] == pytest.approx(om * t, abs=1e-12)


def test_integrate_step_validates_inputs():
    good = np.zeros((2, 6))
    with pytest.raises(MissionError):
        integrate_step(good, np.zeros((2, 3)), 0.0)
    with pytest.raises(MissionError):
        integrate_step(good, np.zeros((2, 3)), 2.0 * DT_MAX)
    with pytest.raises(MissionError):
        integrate_step(np.zeros((2, 5)), np.zeros((2, 3)), 0.01)
    with pytest.raises(MissionError):
        integrate_step(good, np.zeros((3, 3)), 0.01)


def test_rk4_fourth_order_convergence():
    # terminal-state error against a fine-step reference drops by about
    # 2^4 when the step is halved
    states = np.array([[0.1, -0.2, 0.4, 1.1, 0.0, 0.3]])
    controls = np.array([[0.6, 1.7, -0.4]])
    t_end = 0.64

    def terminal(dt):
        st = states
        for _ in range(int(round(t_end / dt))):
            st = integrate_step(st, controls, dt)
        return st[0]

    ref = terminal(0.0005)
    err_h = np.linalg.norm(terminal(0.016) - ref)
    err_h2 = np.linalg.norm(terminal(0.008) - ref)
    ratio = err_h / err_h2
    assert 12.0 <= ratio <= 20.0


# -- curve queries ------------------------------------------------------------


def test_distance_to_curve_brute_force_oracle():
    curve = make_curve("lissajous")
    scale = curve.scale
    dense = curve.point(np.linspace(0.0, TWO_PI, 200001))
    rng = np.random.default_rng(7)
    for _ in range(12):
        p = rng.uniform(-1.5, 1.5, size=2) * scale
        brute = float(np.min(np.hypot(dense[:, 0] - p[0], dense[:, 1] - p[1])))
        assert distance_to_curve(p, curve) == pytest.approx(brute, abs=1e-6 * scale)


def test_distance_to_curve_zero_on_curve():
    curve = make_curve("deltoid")
    for s in (0.1, 2.0, 4.4):
        p = curve.point(s)
        assert distance_to_curve(p, curve) <= 1e-9 * curve.scale


def test_nearest_parameter_recovers_on_curve_point():
    curve = make_curve("ellipse")
    for s in (0.3, 1.9, 5.5):
        p = curve.point(s)
        s_hat = nearest_parameter(p, curve)
        d = np.hypot(*(curve.point(s_hat) - p))
        assert d <= 1e-8 * curve.scale


# -- reference march ----------------------------------------------------------


def test_march_profile_linear_then_eases_into_cap():
    z0, cap, rate, width = 0.0, 5.0, 0.5, 1.0
    z1, r1 = sk.march_profile(z0, cap, 2.0, rate, width)
    assert z1 == pytest.approx(1.0, rel=1e-12)
    assert r1 == pytest.approx(rate, rel=1e-12)
    prev = -np.inf
    for t in np.linspace(0.0, 60.0, 1201):
        z, r = sk.march_profile(z0, cap, float(t), rate, width)
        assert z <= cap + 1e-12
        assert z >= prev - 1e-12
        assert r >= -1e-12
        prev = z
    z_end, r_end = sk.march_profile(z0, cap, 60.0, rate, width)
    assert z_end == pytest.approx(cap, abs=1e-8)
    assert r_end == pytest.approx(0.0, abs=1e-8)


def test_march_profile_c1_at_ease_junction():
    z0, cap, rate, width = 0.0, 5.0, 0.5, 1.0
    t_junction = (cap - z0 - width) / rate
    for eps in (1e-7, 1e-5):
        z_m, r_m = sk.march_profile(z0, cap, t_junction - eps, rate, width)
        z_p, r_p = sk.march_profile(z0, cap, t_junction + eps, rate, width)
        assert z_p - z_m == pytest.approx(2.0 * eps * rate, rel=1e-3)
        assert r_p == pytest.approx(r_m, rel=1e-4)


# -- initial conditions -------------------------------------------------------


def test_initial_states_invariants():
    curve = make_curve("deltoid")
    cp = make_params(curve)
    config = MissionConfig(curve=curve, n=4, seed=3)
    rng = np.random.default_rng(config.seed)
    states, z0 = initial_states(config, cp, rng)
    assert states.shape == (4, 6)
    scale = curve.scale
    for i in range(4):
        # on the annulus around the curve
        assert distance_to_curve(states[i, 0:2], curve) <= config.annulus_frac * scale + 1e-9
        # heading near the local tangent
        s_near = nearest_parameter(states[i, 0:2], curve)
        fr = curve.frenet(s_near)
        dpsi = np.mod(states[i, 2] - fr.tangent_angle + np.pi, TWO_PI) - np.pi
        assert abs(dpsi) <= config.heading_spread + 1e-9
        # lifted coordinate consistent with the nearest parameter
        assert states[i, 4] == pytest.approx(z0[i], rel=1e-12)
        assert z0[i] / cp.lift_gain == pytest.approx(s_near, abs=1e-9)
        assert states[i, 3] >= cp.v_min - 1e-12
    for i in range(4):
        for j in range(i + 1, 4):
            gap = np.hypot(*(states[i, 0:2] - states[j, 0:2]))
            assert gap >= 2.0 * cp.d_ao - 1e-9


def test_initial_states_deterministic_per_seed():
    curve = make_curve("lissajous")
    cp = make_params(curve)
    config = MissionConfig(curve=curve, n=4, seed=11)
    a1, z1 = initial_states(config, cp, np.random.default_rng(11))
    a2, z2 = initial_states(config, cp, np.random.default_rng(11))
    assert np.array_equal(a1, a2)
    assert np.array_equal(z1, z2)


# -- mission configuration ----------------------------------------------------


def test_mission_config_validation():
    curve = make_curve("circle")
    with pytest.raises(MissionError):
        MissionConfig(curve=curve, n=0).validate()
    with pytest.raises(MissionError):
        MissionConfig(curve=curve, dt=0.05).validate()
    with pytest.raises(MissionError):
        MissionConfig(curve=curve, horizon=-1.0).validate()
    with pytest.raises(MissionError):
        MissionConfig(curve=curve, snapshot_times=(999.0,)).validate()
    with pytest.raises(MissionError):
        MissionConfig(curve="circle").validate()
    MissionConfig(curve=curve).validate()


# -- closed loop --------------------------------------------------------------


def test_mission_deterministic_repeat():
    curve = make_curve("deltoid")
    config = MissionConfig(curve=curve, n=4, seed=0, horizon=12.0)
    m1, log1 = run_mission(config)
    m2, log2 = run_mission(config)
    assert np.array_equal(log1.data, log2.data)
    assert np.array_equal(m1.min_distance, m2.min_distance)
    assert np.array_equal(m1.sigma, m2.sigma)
    assert m1.final_vertex_errors is not None
    assert np.array_equal(m1.final_vertex_errors, m2.final_vertex_errors)


def test_mission_log_layout():
    curve = make_curve("ellipse")
    config = MissionConfig(curve=curve, n=2, seed=1, horizon=2.0, dt=0.01)
    metrics, log = run_mission(config)
    n_records = int(round(config.horizon / config.dt)) + 1
    assert log.data.shape == (n_records, 2, len(TRAJECTORY_COLUMNS))
    assert log.times.shape == (n_records,)
    assert np.allclose(np.diff(log.times), config.dt)
    assert metrics.sigma.shape == (n_records, 2)
    # sweep-only missions never blend
    assert float(np.max(metrics.sigma)) == 0.0
    assert metrics.final_vertex_errors is None


def test_sweep_only_reference_keeps_marching():
    curve = make_curve("circle")
    config = MissionConfig(curve=curve, n=1, seed=0, horizon=20.0)
    cp = make_params(curve)
    _metrics, log = run_mission(config)
    z = log.data[:, 0, 4]
    # one agent, no avoidance: lifted progress tracks the open-ended
    # reference rate over the whole run
    gained = z[-1] - z[0]
    assert gained == pytest.approx(cp.lift_gain * cp.v_ref * 20.0, rel=0.02)


def test_single_agent_circle_adherence():
    curve = make_curve("circle")
    config = MissionConfig(curve=curve, n=1, seed=0, horizon=30.0)
    metrics, _log = run_mission(config)
    after = metrics.times >= 10.0
    mean_adh = float(np.mean(metrics.mean_adherence[after]))
    assert mean_adh <= 1e-3 * curve.scale


def test_mission_practical_invariance_during_sweep():
    curve = make_curve("deltoid")
    config = MissionConfig(curve=curve, n=4, seed=0, horizon=16.0)
    metrics, _log = run_mission(config)
    window = (metrics.times >= 10.0) & (metrics.times <= 16.0)
    assert float(np.mean(metrics.mean_adherence[window])) <= 2e-2 * curve.scale


def test_mission_controls_stay_bounded():
    curve = make_curve("deltoid")
    config = MissionConfig(curve=curve, n=4, seed=0, horizon=40.0)
    _metrics, log = run_mission(config)
    for col in (9, 10, 11):
        assert float(np.max(np.abs(log.data[:, :, col]))) <= 1e3


def test_mission_vertex_errors_settle_monotonically():
    curve = make_curve("deltoid")
    config = MissionConfig(curve=curve, n=4, seed=0, horizon=100.0)
    metrics, log = run_mission(config)
    assert metrics.completed
    pos = metrics.assignment.position
    errs = np.hypot(
        log.data[:, :, 0] - pos[None, :, 0], log.data[:, :, 1] - pos[None, :, 1]
    ).max(axis=1)
    tail = errs[int(0.9 * errs.shape[0]) :]
    slack = 1e-6 * curve.scale
    assert np.all(np.diff(tail) <= slack)
    assert metrics.final_vertex_errors is not None
    assert float(metrics.final_vertex_errors.max()) <= 0.02 * curve.scale
    k100 = min(int(round(100.0 / config.dt)), metrics.sigma.shape[0] - 1)
    assert float(metrics.sigma[k100].min()) >= 0.99


def test_mission_collision_flag_truncates():
    # two coincident agents trip the abort distance on the first record
    curve = make_curve("circle")
    cp = make_params(curve)
    sv, xs, ys = curve.sample_cache(2048)
    p = curve.point(0.0)
    st = np.zeros((2, 6))
    st[:, 0] = p[0]
    st[:, 1] = p[1]
    st[:, 3] = cp.v_min
    traj, min_dist, _adh, _sig, filled, collision, nonfinite = sk.mission_core(
        st,
        np.zeros(2),
        np.full(2, np.inf),
        curve.kind,
        curve.par,
        curve.eps_sing,
        np.ascontiguousarray(sv),
        np.ascontiguousarray(xs),
        np.ascontiguousarray(ys),
        np.zeros(2),
        np.zeros(2),
        np.zeros(2),
        False,
        cp,
        0.01,
        100,
        0.5 * cp.d_safe,
    )
    assert collision
    assert not nonfinite
    assert filled == 1
    assert float(min_dist[0]) == pytest.approx(0.0, abs=1e-12)


def test_mission_finder_n_mismatch_rejected():
    from curveswarm.finder import FinderConfig

    curve = make_curve("ellipse")
    config = MissionConfig(curve=curve, n=4, finder=FinderConfig(n=5))
    with pytest.raises(MissionError):
        run_mission(config)
