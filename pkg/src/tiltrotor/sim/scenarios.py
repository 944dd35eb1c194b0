"""Scenario definitions and the closed-loop simulation driver."""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..allocation import FZ_MIN, allocate
from ..controller import (
    ControllerConfig,
    ControllerState,
    Reference,
    control_step,
    transform_state,
    validate_gains,
)
from ..errors import GainRejection, SimulationAborted, TiltrotorError
from ..so3 import euler_rate_jacobian, wrap_angle
from ..vehicle import ActuatorCommand, RigidState, apply_mixer, plant_step, saturate
from .contact import CartModel, ContactState, PerchSite, perch_and_push_step, perch_pose
from .log import COLUMNS, SimulationLog
from .references import Pose, pitch_profile_reference, sequential_planner, square_xy_reference


@dataclass(frozen=True, eq=False)
class PerchSettings:
    """Perch site, cart and the open-loop thrust schedule used after attach."""

    site: PerchSite
    cart: CartModel = field(default_factory=CartModel)
    idle_thrust: float = 0.5  # N per rotor while the tilt swings round
    push_thrust: float = 3.0  # N per rotor after the step
    rotate_time: float = 1.5  # s between attach and the thrust step
    max_speed: float = 0.5  # planner limits
    max_rate: float = 0.5
    min_duration: float = 2.0


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    duration: float
    initial: RigidState
    reference_id: str = "hold"
    reference_params: dict = field(default_factory=dict)
    plant_dt: float = 2e-4
    control_dt: float = 2e-3
    perch: Optional[PerchSettings] = None
    settle_time: float = 1.0  # s excluded from steady-state metrics

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ValueError("duration must be positive")
        if not (self.plant_dt > 0.0 and self.control_dt > 0.0):
            raise ValueError("time steps must be positive")
        ratio = self.control_dt / self.plant_dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ValueError("control_dt must be an integer multiple of plant_dt")
        if self.reference_id not in REFERENCES:
            raise ValueError(f"unknown reference generator {self.reference_id!r}")

    @property
    def substeps(self):
        return int(round(self.control_dt / self.plant_dt))

    def reference(self):
        """Build the time -> :class:`Reference` callable for this scenario."""
        return REFERENCES[self.reference_id](self)


def _hold(sc):
    prm = sc.reference_params
    ref = Reference.hold(prm.get("p", (0.0, 0.0, 1.0)), prm.get("pitch", 0.0), prm.get("yaw", 0.0))
    return lambda t: ref


def _square(sc):
    prm = dict(sc.reference_params)
    return lambda t: square_xy_reference(t, **prm)


def _pitch(sc):
    prm = dict(sc.reference_params)
    return lambda t: pitch_profile_reference(t, **prm)


def _sequential(sc):
    if sc.perch is None:
        raise ValueError("the sequential planner needs a perch site")
    ps = sc.perch
    start = Pose(tuple(sc.initial.p.tolist()), float(sc.initial.phi[1]), float(sc.initial.phi[2]))
    return sequential_planner(start, perch_pose(ps.site), ps.max_speed, ps.max_rate,
                              ps.min_duration)


REFERENCES = {
    "hold": _hold,
    "square_xy": _square,
    "pitch_sweep": _pitch,
    "sequential": _sequential,
}


def _offset_state(target, position_offset, angle_offset, yaw=0.0):
    p = np.asarray(target, float) + position_offset
    return RigidState.hover(p, (angle_offset, angle_offset, yaw + angle_offset))


def hover_offset_scenario(duration=8.0, target=(0.0, 0.0, 1.0), position_offset=0.2,
                          angle_offset=math.radians(10.0), **rates):
    """Regulate to a hover point from an offset of ``position_offset`` per axis and
    ``angle_offset`` per Euler angle."""
    return Scenario("hover_offset", duration, _offset_state(target, position_offset, angle_offset),
                    "hold", {"p": tuple(target)}, **rates)


def yaw90_hover_scenario(duration=8.0, target=(0.5, -0.3, 1.0), yaw=0.5 * math.pi,
                         position_offset=0.1, angle_offset=math.radians(5.0), **rates):
    """Hover with the nose at 90 deg, where the untransformed position map is singular."""
    return Scenario("yaw90_hover", duration,
                    _offset_state(target, position_offset, angle_offset, yaw),
                    "hold", {"p": tuple(target), "yaw": yaw}, **rates)


def square_xy_scenario(duration=22.0, side=1.0, period=20.0, altitude=1.0, **rates):
    """Square loop in the horizontal plane with pitch and yaw held at zero."""
    return Scenario("square_xy", duration, RigidState.hover((0.0, 0.0, altitude)),
                    "square_xy", {"side": side, "period": period, "altitude": altitude}, **rates)


def pitch_sweep_scenario(duration=18.0, amplitude=math.radians(60.0), period=16.0,
                         position=(0.0, 0.0, 1.0), **rates):
    """Sinusoidal pitch sweep while holding position."""
    return Scenario("pitch_sweep", duration, RigidState.hover(position),
                    "pitch_sweep",
                    {"amplitude": amplitude, "period": period, "position": tuple(position)},
                    **rates)


def perch_push_scenario(duration=19.0, start=(0.0, 0.0, 1.0), start_yaw=0.6,
                        site=None, perch=None, **rates):
    """Fly the sequential plan onto an inclined cart face, latch, then push."""
    if perch is None:
        if site is None:
            incline = math.radians(35.0)
            site = PerchSite((1.5, 0.8, 1.5), (-math.sin(incline), 0.0, math.cos(incline)))
        perch = PerchSettings(site)
    return Scenario("perch_push", duration, RigidState.hover(start, (0.0, 0.0, start_yaw)),
                    "sequential", {}, perch=perch, **rates)


SCENARIO_BUILDERS = {
    "hover_offset": hover_offset_scenario,
    "yaw90_hover": yaw90_hover_scenario,
    "square_xy": square_xy_scenario,
    "pitch_sweep": pitch_sweep_scenario,
    "perch_push": perch_push_scenario,
}
BUILTIN_SCENARIOS = tuple(SCENARIO_BUILDERS)


def builtin_scenario(name, **kwargs):
    """Build a named scenario; keyword arguments override its defaults."""
    try:
        builder = SCENARIO_BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {BUILTIN_SCENARIOS}") from None
    return builder(**kwargs)


def rk4_step(state, cmd, dt, params):
    """Classical RK4 plant step with the actuator command held over ``dt``."""
    return plant_step(state, cmd, params, dt)


def _attached_command(contact, perch, elapsed):
    thrust = perch.idle_thrust if elapsed < perch.rotate_time else perch.push_thrust
    return ActuatorCommand(contact.eta_target, (thrust,) * 4)


def _reference_rates(ref, phi1d, phi1d_dot, margin):
    phi_d = np.array([phi1d, ref.pitch[0], ref.yaw[0]])
    rates = np.array([phi1d_dot, ref.pitch[1], ref.yaw[1]])
    return phi_d, euler_rate_jacobian(phi_d, margin) @ rates


def run_scenario(scenario, gains, params, controller_config=ControllerConfig(),
                 fz_min=FZ_MIN, log_every=1, check_gains=True):
    """Simulate ``scenario`` in closed loop and return the log.

    The controller runs every ``control_dt`` on the true state; its command
    is held while the plant takes ``substeps`` RK4 steps. One log row is
    written every ``log_every`` control cycles plus the final sample.

    Raises
    ------
    GainRejection
        If ``check_gains`` and the gains fail :func:`validate_gains`.
    SimulationAborted
        On NaN, Euler-bound violation or a singular controller/allocation.
        The partial log is attached to the exception.
    """
    if check_gains:
        report = validate_gains(gains)
        if not report.accepted:
            raise GainRejection(report.violations)
    config = replace(controller_config, enforce_gains=check_gains)
    reference = scenario.reference()
    perch = scenario.perch
    margin = config.margin
    limit = 0.5 * math.pi - margin
    dt_c, dt_p, n_sub = scenario.control_dt, scenario.plant_dt, scenario.substeps
    n_ctrl = int(round(scenario.duration / dt_c))

    log = SimulationLog(metadata={"scenario": scenario.name})
    state, cstate, contact = scenario.initial, ControllerState(), ContactState()
    saturation_count = 0
    last = None  # (ref, phi1_d, phi1d_dot, p_tilde_d) of the last free-flight cycle

    def abort(message, t):
        log.metadata.update(saturation_count=saturation_count, aborted=message)
        raise SimulationAborted(message, log=log, time=t)

    for k in range(n_ctrl + 1):
        t = k * dt_c
        if not contact.attached:
            ref = reference(t)
            try:
                out = control_step(state, ref, cstate, gains, params, dt_c, config)
                cmd, sat = saturate(allocate(out.wrench, params, fz_min, margin), params, margin)
            except TiltrotorError as exc:
                abort(f"t = {t:.4f} s: {exc}", t)
            cstate = out.state
            wrench, e_u, e_f = out.wrench, out.e_u, out.e_f
            last = (ref, out.phi1_d, cstate.phi1d_dot_prev, out.p_tilde_d)
        else:
            cmd = _attached_command(contact, perch, t - contact.attach_time)
            cmd, sat = saturate_thrust(cmd, params)
            wrench = apply_mixer(cmd.eta_d, cmd.F, params)
            e_u, e_f = math.nan, np.full(5, math.nan)
        saturation_count += int(sat)

        if k % log_every == 0 or k == n_ctrl:
            ref, phi1d, phi1d_dot, pt_d = last
            phi_d, omega_d = _reference_rates(ref, phi1d, phi1d_dot, margin)
            log.append(_row(t, state, ref, phi_d, omega_d, pt_d, e_u, e_f, wrench, cmd, sat,
                            contact.attached, margin))
        if k == n_ctrl:
            break

        try:
            for j in range(n_sub):
                ts = t + j * dt_p
                if perch is None:
                    state = plant_step(state, cmd, params, dt_p)
                    continue
                if contact.attached:
                    cmd, _ = saturate_thrust(
                        _attached_command(contact, perch, ts - contact.attach_time), params)
                state, contact = perch_and_push_step(state, contact, cmd, perch.site, perch.cart,
                                                     params, dt_p, ts)
        except TiltrotorError as exc:
            abort(f"t = {t:.4f} s: {exc}", t)

        if not state.is_finite():
            abort(f"t = {t + dt_c:.4f} s: non-finite state", t + dt_c)
        if not contact.attached and (abs(state.phi[0]) > limit or abs(state.phi[1]) > limit):
            abort(f"t = {t + dt_c:.4f} s: roll/pitch {state.phi[:2]} left the Euler bounds",
                  t + dt_c)
        if abs(state.phi[2]) > math.pi:
            state = replace(state, phi=(state.phi[0], state.phi[1], wrap_angle(state.phi[2])))

    log.metadata.update(
        saturation_count=saturation_count,
        attach_time=contact.attach_time,
        cart_displacement=contact.cart_s if contact.attached else 0.0,
        eta_target=contact.eta_target,
    )
    return log


def saturate_thrust(cmd, params):
    """Clamp thrusts only; attached-mode tilt may exceed +-pi/2."""
    F = np.clip(cmd.F, 0.0, params.F_max)
    clamped = bool(np.any(F != cmd.F))
    return (ActuatorCommand(cmd.eta_d, F) if clamped else cmd), clamped


def _row(t, state, ref, phi_d, omega_d, pt_d, e_u, e_f, wrench, cmd, sat, attached, margin):
    try:
        pt = transform_state(state, margin).p_tilde
    except TiltrotorError:
        pt = np.full(3, math.nan)
    row = [t, *state.p, *state.v, *state.phi, *state.omega, state.eta, *pt,
           *ref.p, *ref.v, *phi_d, *omega_d, *pt_d,
           e_u, *e_f, wrench.f_x, wrench.f_z, *wrench.tau, cmd.eta_d, *cmd.F,
           int(sat), int(attached)]
    assert len(row) == len(COLUMNS)
    return row
