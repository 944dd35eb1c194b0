"""Tiltrotor plant: parameters, mixer, rigid-body dynamics, servo lag, saturation.

All four rotors tilt together by the servo angle ``eta`` about the body y
axis. Rotor ``i`` produces thrust ``F[i]`` along ``(sin eta, 0, cos eta)`` in
the body frame. The virtual wrench ``(f_x, f_z, tau)`` is ``C(eta) @ F``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GimbalLock
from .integrators import rk4
from .so3 import GIMBAL_MARGIN, euler_to_rotmat

STANDARD_GRAVITY = 9.81

# rotor-shaft spacing 0.196 m and on-shaft rotor spacing 0.257 m, halved
DESIGN_L_V = 0.098
DESIGN_L_H = 0.1285
DESIGN_MASS = 2.1


@dataclass(frozen=True, eq=False)
class VehicleParams:
    """Physical constants of the vehicle (SI units).

    Attributes
    ----------
    m : float
        Total mass [kg].
    I_b : array_like, shape (3, 3)
        Inertia about the centre of mass in the body frame [kg m^2].
    L_h, L_v : float
        Half the rotor-to-rotor distance along body y and body x [m].
    k_f : float
        Rotor reaction-torque to thrust ratio [m].
    g : float
        Gravitational acceleration [m/s^2].
    F_max : float
        Per-rotor thrust ceiling [N].
    servo_tau : float
        First-order time constant of the tilt servo [s].
    """

    m: float = DESIGN_MASS
    I_b: np.ndarray = field(default_factory=lambda: np.diag([0.021, 0.027, 0.045]))
    L_h: float = DESIGN_L_H
    L_v: float = DESIGN_L_V
    k_f: float = 0.016
    g: float = STANDARD_GRAVITY
    F_max: float = 12.5
    servo_tau: float = 0.02

    def __post_init__(self):
        I_b = np.array(self.I_b, dtype=float)
        if I_b.shape != (3, 3):
            raise ValueError(f"I_b must be 3x3, got shape {I_b.shape}")
        if not np.allclose(I_b, I_b.T, rtol=0.0, atol=1e-12):
            raise ValueError("I_b must be symmetric")
        if np.min(np.linalg.eigvalsh(I_b)) <= 0.0:
            raise ValueError("I_b must be positive definite")
        for name in ("m", "L_h", "L_v", "k_f", "F_max", "servo_tau"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if not math.isfinite(self.g):
            raise ValueError("g must be finite")
        I_b.setflags(write=False)
        object.__setattr__(self, "I_b", I_b)
        I_inv = np.linalg.inv(I_b)
        object.__setattr__(self, "_I", tuple(I_b.ravel().tolist()))
        object.__setattr__(self, "_I_inv", tuple(I_inv.ravel().tolist()))

    @property
    def hover_thrust(self):
        """Per-rotor thrust for level hover [N]."""
        return self.m * self.g / 4.0


@dataclass(frozen=True, eq=False)
class RigidState:
    """Position/velocity in the world frame, ZYX Euler angles, body rates, tilt."""

    p: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    omega: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        for name in ("p", "v", "phi", "omega"):
            arr = np.array(getattr(self, name), dtype=float).reshape(3)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "eta", float(self.eta))

    @classmethod
    def hover(cls, p=(0.0, 0.0, 0.0), phi=(0.0, 0.0, 0.0), eta=0.0):
        return cls(np.asarray(p, float), np.zeros(3), np.asarray(phi, float), np.zeros(3), eta)

    def to_vector(self):
        """Flat 12-vector ``[p, v, phi, omega]`` (``eta`` is kept separately)."""
        return [*self.p.tolist(), *self.v.tolist(), *self.phi.tolist(), *self.omega.tolist()]

    @classmethod
    def from_vector(cls, x, eta):
        return cls(np.array(x[0:3]), np.array(x[3:6]), np.array(x[6:9]), np.array(x[9:12]), eta)

    @property
    def R(self):
        return euler_to_rotmat(self.phi)

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.p))
            and np.all(np.isfinite(self.v))
            and np.all(np.isfinite(self.phi))
            and np.all(np.isfinite(self.omega))
            and math.isfinite(self.eta)
        )


@dataclass(frozen=True, eq=False)
class ActuatorCommand:
    """Desired tilt angle [rad] and four rotor thrusts [N]."""

    eta_d: float
    F: np.ndarray

    def __post_init__(self):
        F = np.array(self.F, dtype=float).reshape(4)
        F.setflags(write=False)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "eta_d", float(self.eta_d))


@dataclass(frozen=True, eq=False)
class VirtualWrench:
    """Body-frame forces along x and z plus body torque."""

    f_x: float
    f_z: float
    tau: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        tau = np.array(self.tau, dtype=float).reshape(3)
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "f_x", float(self.f_x))
        object.__setattr__(self, "f_z", float(self.f_z))

    def as_vector(self):
        return np.array([self.f_x, self.f_z, *self.tau])

    @classmethod
    def from_vector(cls, u):
        return cls(u[0], u[1], u[2:5])


class StateDerivative(NamedTuple):
    p_dot: np.ndarray
    v_dot: np.ndarray
    phi_dot: np.ndarray
    omega_dot: np.ndarray


def mixer_matrix(eta, params):
    """``C(eta)``: maps rotor thrusts ``F`` to ``[f_x, f_z, tau_1, tau_2, tau_3]``."""
    s, c = math.sin(eta), math.cos(eta)
    Lh, Lv, kf = params.L_h, params.L_v, params.k_f
    return np.array(
        [
            [s, s, s, s],
            [c, c, c, c],
            [-Lh * c - kf * s, Lh * c + kf * s, Lh * c - kf * s, -Lh * c + kf * s],
            [-Lv * c, -Lv * c, Lv * c, Lv * c],
            [Lh * s - kf * c, -Lh * s + kf * c, -Lh * s - kf * c, Lh * s + kf * c],
        ]
    )


def _mix(s, c, F, Lh, Lv, kf):
    """Scalar expansion of ``mixer_matrix(eta) @ F`` for the integrator hot path."""
    F1, F2, F3, F4 = F
    total = F1 + F2 + F3 + F4
    a = -F1 + F2 + F3 - F4  # Lh c pattern of row 3
    b = -F1 + F2 - F3 + F4  # kf pattern of rows 3 and 5
    d = -F1 - F2 + F3 + F4
    return (
        s * total,
        c * total,
        Lh * c * a + kf * s * b,
        Lv * c * d,
        -Lh * s * a + kf * c * b,
    )


def apply_mixer(eta, F, params):
    """Return the :class:`VirtualWrench` produced by thrusts ``F`` at tilt ``eta``."""
    fx, fz, t1, t2, t3 = _mix(math.sin(eta), math.cos(eta), [float(f) for f in F],
                              params.L_h, params.L_v, params.k_f)
    return VirtualWrench(fx, fz, (t1, t2, t3))


def rigid_body_rhs(x, fx, fz, t1, t2, t3, params, margin=GIMBAL_MARGIN):
    """Right-hand side of the rigid-body equations on the flat state ``x``.

    Returns the time derivative of ``[p, v, phi, omega]`` as a list. Raises
    :class:`GimbalLock` when pitch leaves ``(-pi/2 + margin, pi/2 - margin)``.
    """
    phi1, phi2, phi3 = x[6], x[7], x[8]
    w1, w2, w3 = x[9], x[10], x[11]
    if abs(phi2) > 0.5 * math.pi - margin:
        raise GimbalLock(f"|pitch| = {abs(phi2):.6f} rad exceeds pi/2 - {margin}")
    s1, c1 = math.sin(phi1), math.cos(phi1)
    s2, c2 = math.sin(phi2), math.cos(phi2)
    s3, c3 = math.sin(phi3), math.cos(phi3)

    # m vdot = R (fx e1 + fz e3) - m g e3
    inv_m = 1.0 / params.m
    ax = (fx * c3 * c2 + fz * (c3 * s2 * c1 + s3 * s1)) * inv_m
    ay = (fx * s3 * c2 + fz * (s3 * s2 * c1 - c3 * s1)) * inv_m
    az = (-fx * s2 + fz * c2 * c1) * inv_m - params.g

    # phidot = Q^-1 omega
    q = s1 * w2 + c1 * w3
    d1 = w1 + q * s2 / c2
    d2 = c1 * w2 - s1 * w3
    d3 = q / c2

    # I omegadot = -omega x (I omega) + tau
    I = params._I
    Iw1 = I[0] * w1 + I[1] * w2 + I[2] * w3
    Iw2 = I[3] * w1 + I[4] * w2 + I[5] * w3
    Iw3 = I[6] * w1 + I[7] * w2 + I[8] * w3
    r1 = t1 - (w2 * Iw3 - w3 * Iw2)
    r2 = t2 - (w3 * Iw1 - w1 * Iw3)
    r3 = t3 - (w1 * Iw2 - w2 * Iw1)
    J = params._I_inv
    return [
        x[3], x[4], x[5],
        ax, ay, az,
        d1, d2, d3,
        J[0] * r1 + J[1] * r2 + J[2] * r3,
        J[3] * r1 + J[4] * r2 + J[5] * r3,
        J[6] * r1 + J[7] * r2 + J[8] * r3,
    ]


def dynamics_derivative(state, wrench, params, margin=GIMBAL_MARGIN):
    """Continuous-time rigid-body dynamics under a body-frame virtual wrench."""
    tau = wrench.tau
    d = rigid_body_rhs(state.to_vector(), wrench.f_x, wrench.f_z, tau[0], tau[1], tau[2],
                       params, margin)
    return StateDerivative(np.array(d[0:3]), np.array(d[3:6]), np.array(d[6:9]), np.array(d[9:12]))


def servo_angle(eta0, eta_d, elapsed, servo_tau):
    """Exact solution of the first-order tilt lag ``etadot = (eta_d - eta) / servo_tau``."""
    return eta_d + (eta0 - eta_d) * math.exp(-elapsed / servo_tau)


def plant_step(state, cmd, params, dt, margin=GIMBAL_MARGIN):
    """Advance the plant by ``dt`` with ``cmd`` held constant.

    The servo lag is solved in closed form (it is linear and can be far
    stiffer than ``dt``); the rigid body is advanced with classical RK4 while
    the wrench follows the servo angle inside the step.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    eta0, eta_d, tau_s = state.eta, cmd.eta_d, params.servo_tau
    F = [float(f) for f in cmd.F]
    Lh, Lv, kf = params.L_h, params.L_v, params.k_f

    def f(s, x):
        eta = servo_angle(eta0, eta_d, s, tau_s)
        u = _mix(math.sin(eta), math.cos(eta), F, Lh, Lv, kf)
        return rigid_body_rhs(x, u[0], u[1], u[2], u[3], u[4], params, margin)

    x = rk4(f, 0.0, state.to_vector(), dt)
    return RigidState.from_vector(x, servo_angle(eta0, eta_d, dt, tau_s))


def saturate(cmd, params, margin=GIMBAL_MARGIN):
    """Clamp thrusts into ``[0, F_max]`` and tilt into ``(-pi/2 + margin, pi/2 - margin)``.

    Returns ``(command, clamped)`` where ``clamped`` tells whether anything changed.
    """
    F = np.clip(cmd.F, 0.0, params.F_max)
    limit = 0.5 * math.pi - margin
    eta_d = min(limit, max(-limit, cmd.eta_d))
    clamped = bool(np.any(F != cmd.F) or eta_d != cmd.eta_d)
    if not clamped:
        return cmd, False
    return ActuatorCommand(eta_d, F), True
