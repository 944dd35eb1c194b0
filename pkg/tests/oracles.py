"""Independent reference computations shared by several test modules."""

import math

import numpy as np

from tiltrotor.controller import decompose, rotational_terms, translational_accel, translational_terms
from tiltrotor.integrators import rk4
from tiltrotor.so3 import rot_z
from tiltrotor.vehicle import RigidState, VirtualWrench, rigid_body_rhs


def smooth_wrench_schedule(rng, params):
    """Random band-limited wrench: hover thrust plus a few sinusoids per channel."""
    base = np.array([0.0, params.m * params.g, 0.0, 0.0, 0.0])
    amp = np.array([3.0, 4.0, 0.05, 0.05, 0.03])
    freq = rng.uniform(0.5, 3.0, size=(5, 3))
    phase = rng.uniform(0.0, 2 * math.pi, size=(5, 3))
    weight = rng.uniform(-1.0, 1.0, size=(5, 3)) / 3.0

    def wrench(t):
        u = base + amp * np.sum(weight * np.sin(2 * math.pi * freq * t + phase), axis=1)
        return VirtualWrench.from_vector(u)

    return wrench


def random_flight(rng, params, duration=1.0, dt=1e-4):
    """Integrate the rigid body under a smooth random wrench; returns times, states, wrenches."""
    x = RigidState(rng.normal(scale=1.0, size=3), rng.normal(scale=0.5, size=3),
                   rng.uniform(-0.5, 0.5, 3), rng.normal(scale=0.5, size=3)).to_vector()
    wrench = smooth_wrench_schedule(rng, params)

    def f(t, xx):
        w = wrench(t)
        return rigid_body_rhs(xx, w.f_x, w.f_z, *w.tau, params)

    n = int(round(duration / dt))
    xs = [x]
    for k in range(n):
        x = rk4(f, k * dt, x, dt)
        xs.append(x)
    times = np.arange(n + 1) * dt
    return times, [RigidState.from_vector(x, 0.0) for x in xs], wrench


def p_tilde(state):
    return rot_z(state.phi[2]).T @ state.p


def transformed_dynamics_errors(rng, params, duration=1.0, dt=1e-4, every=50):
    """Worst relative errors of the model against finite-difference accelerations.

    Returns ``(err_p_tilde, err_fully_actuated, err_underactuated)``, each the
    maximum of ``|predicted - fd| / max(1, |fd|)`` along the run.
    """
    times, states, wrench = random_flight(rng, params, duration, dt)
    worst = np.zeros(3)
    for k in range(1, len(states) - 1, every):
        s = states[k]
        w = wrench(times[k])
        prev, nxt = states[k - 1], states[k + 1]
        fd_pt = (p_tilde(nxt) - 2 * p_tilde(s) + p_tilde(prev)) / dt ** 2
        fd_phi = (nxt.phi - 2 * s.phi + prev.phi) / dt ** 2

        h_phi, g_phi = rotational_terms(s, params)
        h_p, g_p = translational_terms(s, h_phi, g_phi)
        pred_pt = translational_accel(s, w, params, h_p, g_p)

        fz_bar = math.cos(s.phi[0]) * w.f_z
        dec = decompose(s, h_p, g_p, h_phi, g_phi, params, tau=w.tau, fz_bar=fz_bar)
        u_f = np.array([w.f_x, fz_bar, *w.tau])
        pred_qf = dec.h_f + dec.g_f @ u_f
        fd_qf = np.array([fd_pt[0], fd_pt[2], *fd_phi])
        pred_qu = dec.h_u + dec.g_u * math.tan(s.phi[0])

        for j, (pred, fd) in enumerate(((pred_pt, fd_pt), (pred_qf, fd_qf),
                                        (np.array([pred_qu]), np.array([fd_pt[1]])))):
            rel = np.linalg.norm(pred - fd) / max(1.0, np.linalg.norm(fd))
            worst[j] = max(worst[j], rel)
    return tuple(worst)


def rk4_order_slope(params, dts=(0.04, 0.02, 0.01, 0.005), duration=1.0, reference_dt=1e-4):
    """Log-log slope of global RK4 error against step size on a torqued tumble."""
    from tiltrotor.sim.scenarios import rk4_step
    from tiltrotor.vehicle import ActuatorCommand

    start = RigidState([0.0, 0.0, 1.0], [0.3, -0.2, 0.1], [0.2, -0.1, 0.3], [1.0, -0.8, 0.6], 0.3)
    cmd = ActuatorCommand(0.3, [6.0, 4.5, 5.5, 5.0])

    def run(dt):
        s = start
        for _ in range(int(round(duration / dt))):
            s = rk4_step(s, cmd, dt, params)
        return np.array(s.to_vector())

    ref = run(reference_dt)
    errors = [np.linalg.norm(run(dt) - ref) for dt in dts]
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0]), errors


def mechanical_energy(log, params):
    v = log.columns("v_x", "v_y", "v_z")
    w = log.columns("omega_1", "omega_2", "omega_3")
    return (0.5 * params.m * np.sum(v ** 2, axis=1) + params.m * params.g * log["p_z"]
            + 0.5 * np.einsum("ij,jk,ik->i", w, params.I_b, w))


def actuator_power(log, params):
    """Power of the logged actual thrust and torque on the logged state."""
    from tiltrotor.so3 import euler_to_rotmat
    from tiltrotor.vehicle import apply_mixer

    power = np.empty(len(log))
    for i in range(len(log)):
        r = log.row(i)
        w = apply_mixer(r["eta"], [r[f"F_{j}"] for j in range(1, 5)], params)
        R = euler_to_rotmat((r["phi_1"], r["phi_2"], r["phi_3"]))
        force = R @ np.array([w.f_x, 0.0, w.f_z])
        power[i] = (force @ [r["v_x"], r["v_y"], r["v_z"]]
                    + np.dot(w.tau, [r["omega_1"], r["omega_2"], r["omega_3"]]))
    return power
