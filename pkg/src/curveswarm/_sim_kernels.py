"""Mission integration kernels: team control ticks, RK4 stepping,
curve-distance queries, and the full fixed-step mission loop.

Trajectory row layout per (step, agent), 12 columns:
(x, y, psi, v, z, vz, sigma, alpha, duty, accel, turn_rate, lift_accel).
Controls are recomputed from each snapshot before stepping and held
constant across the step (zero-order hold).
"""

import numpy as np

from ._accel import jit
from ._control_kernels import agent_control, path_following_control, repulsion_sum, beta_smooth, avoidance_control_law
from ._curve_kernels import curve_point

TWO_PI = 2.0 * np.pi


def rk4_step_team(states, controls, dt):
    """One classical Runge-Kutta step of every agent's 6-state dynamics.

    The dynamics with frozen controls do not depend on the curve:
    (x', y', psi', v', z', vz') = (v cos psi, v sin psi, turn, accel,
    vz, lift_accel).
    """
    n = states.shape[0]
    out = np.empty_like(states)
    for i in range(n):
        x = states[i, 0]
        y = states[i, 1]
        psi = states[i, 2]
        v = states[i, 3]
        z = states[i, 4]
        vz = states[i, 5]
        a = controls[i, 0]
        om = controls[i, 1]
        az = controls[i, 2]
        # stage 1
        k1x = v * np.cos(psi)
        k1y = v * np.sin(psi)
        # stage 2
        psi2 = psi + 0.5 * dt * om
        v2 = v + 0.5 * dt * a
        k2x = v2 * np.cos(psi2)
        k2y = v2 * np.sin(psi2)
        # stage 3 sees the same midpoint rates for psi and v
        k3x = v2 * np.cos(psi2)
        k3y = v2 * np.sin(psi2)
        # stage 4
        psi4 = psi + dt * om
        v4 = v + dt * a
        k4x = v4 * np.cos(psi4)
        k4y = v4 * np.sin(psi4)
        out[i, 0] = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        out[i, 1] = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        out[i, 2] = psi + dt * om
        out[i, 3] = v + dt * a
        out[i, 4] = z + dt * vz + 0.5 * dt * dt * az
        out[i, 5] = vz + dt * az
    return out


def nearest_on_curve(kind, par, px, py, sample_s, sample_x, sample_y):
    """Global distance to the curve and the parameter attaining it.

    Coarse argmin over the cached samples, then ternary search on the
    bracketing window.  Returns (distance, parameter in [0, 2*pi)).
    """
    d2 = (sample_x - px) ** 2 + (sample_y - py) ** 2
    best = int(np.argmin(d2))
    step = TWO_PI / sample_s.shape[0]
    lo = sample_s[best] - step
    hi = sample_s[best] + step
    for _ in range(64):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        x1, y1 = curve_point(kind, par, m1)
        x2, y2 = curve_point(kind, par, m2)
        f1 = (x1 - px) ** 2 + (y1 - py) ** 2
        f2 = (x2 - px) ** 2 + (y2 - py) ** 2
        if f1 < f2:
            hi = m2
        else:
            lo = m1
    s_at = 0.5 * (lo + hi)
    gx, gy = curve_point(kind, par, s_at)
    dist = np.sqrt((gx - px) ** 2 + (gy - py) ** 2)
    return dist, s_at % TWO_PI


def min_pair_distance(px, py):
    """Smallest inter-agent separation; inf for a single agent."""
    n = px.shape[0]
    best = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            d = np.sqrt((px[i] - px[j]) ** 2 + (py[i] - py[j]) ** 2)
            if d < best:
                best = d
    return best


def march_profile(z0, z_cap, t, rate, width):
    """Lifted reference position and rate at time t.

    Marches linearly at `rate` from z0, then eases into the cap over
    the final `width` of lift: the rate scales with the remaining gap,
    so the profile is C1 and the reference never overshoots the cap.
    A hard stop here would dump the arrival speed into the transverse
    errors and leave agents stranded in a standstill tug-of-war.
    """
    linear = z0 + rate * t
    if linear <= z_cap - width:
        return linear, rate
    gap0 = z_cap - z0
    if gap0 > width:
        t_ramp = t - (gap0 - width) / rate
        gap = width * np.exp(-rate * t_ramp / width)
    else:
        gap = gap0 * np.exp(-rate * t / width)
    return z_cap - gap, rate * gap / width


def team_controls(
    states,
    z0,
    z_cap,
    t,
    kind,
    par,
    eps_sing,
    target_x,
    target_y,
    target_psi,
    has_targets,
    ref_rate,
    cp,
):
    """Controls plus (sigma, alpha, duty) for every agent at one instant.

    The lifted reference for agent i marches as z0[i] + ref_rate * t
    and eases smoothly into z_cap[i] (the agent's vertex address after
    the required revolutions); a sweep-only mission passes an infinite
    cap so the march never stops.  The reference is leashed to at most
    lead_width (in parameter) ahead of the agent's own lifted coordinate
    so an agent held up by avoidance is not punished with a catch-up
    sprint once it breaks free.  Without targets sigma is pinned at
    zero and the nominal input is pure path following; avoidance still
    applies.  A speed envelope caps acceleration once |v| (or |vz|)
    would exceed its bound, so a delayed agent catches up at a pace
    other agents' avoidance can still brake against.
    """
    n = states.shape[0]
    out = np.empty((n, 6))
    px = np.ascontiguousarray(states[:, 0])
    py = np.ascontiguousarray(states[:, 1])
    psi = np.ascontiguousarray(states[:, 2])
    v = np.ascontiguousarray(states[:, 3])
    z = np.ascontiguousarray(states[:, 4])
    vz = np.ascontiguousarray(states[:, 5])
    width = cp.lift_gain * cp.brake_width
    lead = cp.lift_gain * cp.lead_width
    vz_max = 2.0 * ref_rate
    for i in range(n):
        z_ref, rate_i = march_profile(z0[i], z_cap[i], t, ref_rate, width)
        # leash: a blocked agent's reference waits just ahead of it
        if z_ref > z[i] + lead:
            z_ref = z[i] + lead
            rate_i = 0.0
        if has_targets:
            revs = (z[i] - z0[i]) / (TWO_PI * cp.lift_gain)
            if revs < 0.0:
                revs = 0.0
            a, om, az, sg, al, du = agent_control(
                i,
                px,
                py,
                psi,
                v,
                z,
                vz,
                revs,
                kind,
                par,
                eps_sing,
                target_x[i],
                target_y[i],
                target_psi[i],
                z_ref,
                rate_i,
                cp,
            )
        else:
            a, om, az = path_following_control(
                kind, par, eps_sing, px[i], py[i], psi[i], v[i], z[i], vz[i],
                z_ref, rate_i, cp,
            )
            sg = 0.0
            du = beta_smooth(cp.sigma_accept / cp.delta_sigma)
            fx_raw, fy_raw, prox, _ms = repulsion_sum(i, px, py, psi, cp.d_ao, cp)
            al = du * prox
            if al > 0.0:
                aa, oma, aza = avoidance_control_law(
                    psi[i], v[i], vz[i], du * fx_raw, du * fy_raw, cp
                )
                a = (1.0 - al) * a + al * aa
                om = (1.0 - al) * om + al * oma
                az = (1.0 - al) * az + al * aza
        # speed envelope: restrict acceleration toward high |v|, |vz|
        hi = cp.kv_limit * (cp.v_max - v[i])
        lo = cp.kv_limit * (-cp.v_max - v[i])
        if a > hi:
            a = hi
        if a < lo:
            a = lo
        hi = cp.kv_limit * (vz_max - vz[i])
        lo = cp.kv_limit * (-vz_max - vz[i])
        if az > hi:
            az = hi
        if az < lo:
            az = lo
        # turn-rate saturation: near standstill the regularized inversion
        # emits demand/v_min noise that would thrash the heading
        if om > cp.omega_max:
            om = cp.omega_max
        if om < -cp.omega_max:
            om = -cp.omega_max
        out[i, 0] = a
        out[i, 1] = om
        out[i, 2] = az
        out[i, 3] = sg
        out[i, 4] = al
        out[i, 5] = du
    return out


def mission_core(
    states0,
    z0,
    z_cap,
    kind,
    par,
    eps_sing,
    sample_s,
    sample_x,
    sample_y,
    target_x,
    target_y,
    target_psi,
    has_targets,
    cp,
    dt,
    n_steps,
    abort_dist,
):
    """Full fixed-step closed loop.

    Records state, blending diagnostics, and controls at every tick
    t_k = k*dt for k = 0..n_steps, stepping between records.  Stops
    early when agents close within abort_dist (collision) or any state
    goes non-finite.  Returns (trajectory, min_distance, adherence,
    sigma, filled, collision, nonfinite): `filled` is the number of
    valid records.
    """
    n = states0.shape[0]
    total = n_steps + 1
    traj = np.zeros((total, n, 12))
    min_dist = np.zeros(total)
    adherence = np.zeros(total)
    sigma = np.zeros((total, n))
    states = states0.copy()
    ref_rate = cp.lift_gain * cp.v_ref
    collision = False
    nonfinite = False
    filled = 0
    for k in range(total):
        t = k * dt
        ok = True
        for i in range(n):
            for c in range(6):
                if not np.isfinite(states[i, c]):
                    ok = False
        if not ok:
            nonfinite = True
            break
        md = min_pair_distance(
            np.ascontiguousarray(states[:, 0]), np.ascontiguousarray(states[:, 1])
        )
        acc = 0.0
        for i in range(n):
            dist, _s_at = nearest_on_curve(
                kind, par, states[i, 0], states[i, 1], sample_s, sample_x, sample_y
            )
            acc += dist
        ctrl = team_controls(
            states,
            z0,
            z_cap,
            t,
            kind,
            par,
            eps_sing,
            target_x,
            target_y,
            target_psi,
            has_targets,
            ref_rate,
            cp,
        )
        traj[k, :, 0:6] = states
        traj[k, :, 6] = ctrl[:, 3]
        traj[k, :, 7] = ctrl[:, 4]
        traj[k, :, 8] = ctrl[:, 5]
        traj[k, :, 9] = ctrl[:, 0]
        traj[k, :, 10] = ctrl[:, 1]
        traj[k, :, 11] = ctrl[:, 2]
        min_dist[k] = md
        adherence[k] = acc / n
        sigma[k] = ctrl[:, 3]
        filled = k + 1
        if md < abort_dist:
            collision = True
            break
        if k < n_steps:
            states = rk4_step_team(states, np.ascontiguousarray(ctrl[:, 0:3]), dt)
    return traj, min_dist, adherence, sigma, filled, collision, nonfinite


rk4_step_team = jit(rk4_step_team)
nearest_on_curve = jit(nearest_on_curve)
min_pair_distance = jit(min_pair_distance)
march_profile = jit(march_profile)
team_controls = jit(team_controls)
mission_core = jit(mission_core)
