"""Cascade controller for the 5-CDoF tiltrotor.

Position is handled in the yaw-compensated frame ``p~ = Rz(phi3)^T p``. The
lateral coordinate ``p~_2`` is underactuated and steered through a desired
roll angle; the remaining coordinates ``q_f = [p~_1, p~_3, phi1, phi2, phi3]``
are fully actuated through ``u_f = [f_x, f_z_bar, tau]`` with
``f_z_bar = cos(phi1) f_z``. Each subsystem is feedback-linearised and closed
with PID error dynamics ``e''' + K_d e'' + K_p e' + K_i e = 0``.
"""

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateGf, GainRejection
from .so3 import (
    E3,
    GIMBAL_MARGIN,
    euler_rate_jacobian,
    euler_rate_jacobian_dot,
    euler_rate_jacobian_inv,
    hat,
    rot_x,
    rot_y,
    rot_z,
    wrap_angle,
)
from .vehicle import VirtualWrench

E3_HAT = hat(E3)
E3_HAT_SQ = E3_HAT @ E3_HAT

FULLY_ACTUATED_AXES = ("p~1", "p~3", "roll", "pitch", "yaw")


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------


def _as_gain_matrix(k, name):
    k = np.array(k, dtype=float)
    if k.ndim == 1:
        if k.shape != (5,):
            raise ValueError(f"{name} must have 5 entries, got {k.shape}")
        return np.diag(k)
    if k.shape != (5, 5):
        raise ValueError(f"{name} must be 5x5, got {k.shape}")
    return k


@dataclass(frozen=True, eq=False)
class GainSet:
    """PID gains for the underactuated axis (scalars) and the five fully actuated axes.

    Fully actuated gains may be given as 5-vectors (diagonals) or 5x5 matrices;
    they are stored as matrices so that non-diagonal input can be reported by
    :func:`validate_gains` instead of silently discarded.
    """

    K_up: float
    K_ud: float
    K_ui: float
    K_fp: np.ndarray
    K_fd: np.ndarray
    K_fi: np.ndarray

    def __post_init__(self):
        for name in ("K_up", "K_ud", "K_ui"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("K_fp", "K_fd", "K_fi"):
            mat = _as_gain_matrix(getattr(self, name), name)
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)

    @classmethod
    def from_poles(cls, u_poles, f_poles):
        """Build gains placing each axis' closed-loop poles at the given real values.

        ``u_poles`` is a triple of negative reals; ``f_poles`` is a sequence of
        five such triples, one per fully actuated axis.
        """
        def coeffs(poles):
            c = np.poly(poles).real
            return c[1], c[2], c[3]  # k_d, k_p, k_i

        kd_u, kp_u, ki_u = coeffs(u_poles)
        fc = np.array([coeffs(p) for p in f_poles])
        return cls(kp_u, kd_u, ki_u, fc[:, 1], fc[:, 0], fc[:, 2])

    def axis_triples(self):
        """Yield ``(axis, k_d, k_p, k_i)`` for every axis, underactuated first."""
        yield "p~2", self.K_ud, self.K_up, self.K_ui
        for j, axis in enumerate(FULLY_ACTUATED_AXES):
            yield axis, self.K_fd[j, j], self.K_fp[j, j], self.K_fi[j, j]


class GainReport(NamedTuple):
    accepted: bool
    violations: list


def validate_gains(gains):
    """Check positivity, diagonality and the product conditions ``K_p K_d > K_i``.

    Returns a :class:`GainReport`; ``violations`` lists every failed condition.
    """
    violations = []
    for name in ("K_fp", "K_fd", "K_fi"):
        mat = getattr(gains, name)
        if np.any(mat - np.diag(np.diag(mat)) != 0.0):
            violations.append(f"{name} is not diagonal")
    for axis, kd, kp, ki in gains.axis_triples():
        for label, value in (("K_p", kp), ("K_d", kd), ("K_i", ki)):
            if not (math.isfinite(value) and value > 0.0):
                violations.append(f"{label} must be positive on axis {axis} (got {value})")
        if not kp * kd > ki:
            violations.append(
                f"product condition K_p*K_d > K_i violated on axis {axis}: "
                f"{kp:g}*{kd:g} = {kp * kd:g} <= {ki:g}"
            )
    return GainReport(not violations, violations)


@dataclass(frozen=True)
class Reference:
    """Desired world-frame position, pitch and yaw with first and second derivatives.

    Roll is not part of the reference; the controller chooses it.
    """

    p: tuple = (0.0, 0.0, 0.0)
    v: tuple = (0.0, 0.0, 0.0)
    a: tuple = (0.0, 0.0, 0.0)
    pitch: tuple = (0.0, 0.0, 0.0)  # (value, rate, acceleration)
    yaw: tuple = (0.0, 0.0, 0.0)

    @classmethod
    def hold(cls, p, pitch=0.0, yaw=0.0):
        return cls(tuple(float(x) for x in p), pitch=(float(pitch), 0.0, 0.0),
                   yaw=(float(yaw), 0.0, 0.0))


class TransformedReference(NamedTuple):
    p_tilde: np.ndarray
    p_tilde_dot: np.ndarray
    p_tilde_ddot: np.ndarray


def transform_reference(ref):
    """Express a world-frame position reference in the yaw-compensated frame of the yaw reference."""
    psi, psi_dot, psi_ddot = ref.yaw
    Rzt = rot_z(psi).T
    p, v, a = np.asarray(ref.p, float), np.asarray(ref.v, float), np.asarray(ref.a, float)
    Rp, Rv = Rzt @ p, Rzt @ v
    pt = Rp
    pt_dot = Rv - psi_dot * (E3_HAT @ Rp)
    pt_ddot = (Rzt @ a - 2.0 * psi_dot * (E3_HAT @ Rv) - psi_ddot * (E3_HAT @ Rp)
               + psi_dot ** 2 * (E3_HAT_SQ @ Rp))
    return TransformedReference(pt, pt_dot, pt_ddot)


@dataclass(frozen=True, eq=False)
class ControllerState:
    """Memory carried between control cycles."""

    integral_u: float = 0.0
    integral_f: np.ndarray = field(default_factory=lambda: np.zeros(5))
    prev_tau: np.ndarray = field(default_factory=lambda: np.zeros(3))
    phi1d_prev: Optional[float] = None
    phi1d_dot_prev: float = 0.0
    phi1d_ddot_prev: float = 0.0


@dataclass(frozen=True)
class ControllerConfig:
    margin: float = GIMBAL_MARGIN  # rad, keeps roll/pitch away from +-pi/2
    integral_limit: float = 2.0  # SI, per axis
    derivative_cutoff: float = 20.0  # rad/s, roll-reference differentiator
    cond_max: float = 1e6  # largest acceptable condition number of g_f
    enforce_gains: bool = True


class TransformedState(NamedTuple):
    p_tilde: np.ndarray
    p_tilde_dot: np.ndarray


class Decomposition(NamedTuple):
    h_u: float
    g_u: float
    h_f: np.ndarray
    g_f: np.ndarray


class ControlOutput(NamedTuple):
    wrench: VirtualWrench
    phi1_d: float
    state: ControllerState
    e_u: float
    e_f: np.ndarray
    u_u: float
    u_f: np.ndarray
    p_tilde_d: np.ndarray


# --------------------------------------------------------------------------
# Model terms
# --------------------------------------------------------------------------


def euler_rates(state, margin=GIMBAL_MARGIN):
    return euler_rate_jacobian_inv(state.phi, margin) @ state.omega


def transform_state(state, margin=GIMBAL_MARGIN):
    """``p~ = Rz(phi3)^T p`` and its time derivative."""
    Rzt = rot_z(state.phi[2]).T
    yaw_rate = euler_rates(state, margin)[2]
    Rp = Rzt @ state.p
    return TransformedState(Rp, Rzt @ state.v - yaw_rate * (E3_HAT @ Rp))


def rotational_terms(state, params, margin=GIMBAL_MARGIN):
    """Return ``(h_phi, g_phi)`` with ``phi'' = h_phi + g_phi tau``."""
    Q = euler_rate_jacobian(state.phi, margin)
    phi_dot = euler_rate_jacobian_inv(state.phi, margin) @ state.omega
    Q_dot = euler_rate_jacobian_dot(state.phi, phi_dot)
    I = params.I_b
    g_phi = np.linalg.inv(I @ Q)
    w = state.omega
    h_phi = g_phi @ (-I @ (Q_dot @ phi_dot) - np.cross(w, I @ w))
    return h_phi, g_phi


def translational_terms(state, h_phi, g_phi, margin=GIMBAL_MARGIN):
    """Return ``(h_p, g_p)``, the yaw-transformation terms of ``p~''``.

    ``p~'' = (1/m) Ry Rx (f_x e1 + f_z e3) - g e3 + h_p + g_p tau`` with::

        h_p = -e3^ Rz^T (2 yaw' p' + h_phi[2] p) + yaw'^2 e3^2 Rz^T p
        g_p = -e3^ Rz^T p  g_phi[2, :]

    The last term of ``h_p`` follows from differentiating ``Rz^T p`` twice
    with ``d/dt Rz^T = -yaw' e3^ Rz^T``, which gives it a positive sign.
    """
    Rzt = rot_z(state.phi[2]).T
    yaw_rate = euler_rates(state, margin)[2]
    Rp = Rzt @ state.p
    h_p = (-E3_HAT @ (Rzt @ (2.0 * yaw_rate * state.v + h_phi[2] * state.p))
           + yaw_rate ** 2 * (E3_HAT_SQ @ Rp))
    g_p = np.outer(-E3_HAT @ Rp, g_phi[2])
    return h_p, g_p


def translational_accel(state, wrench, params, h_p, g_p):
    """Full right-hand side of the ``p~`` dynamics for a given wrench."""
    phi1, phi2 = state.phi[0], state.phi[1]
    force = rot_y(phi2) @ rot_x(phi1) @ np.array([wrench.f_x, 0.0, wrench.f_z])
    return force / params.m - params.g * E3 + h_p + g_p @ wrench.tau


def decompose(state, h_p, g_p, h_phi, g_phi, params, tau=None, fz_bar=None,
              margin=GIMBAL_MARGIN, cond_max=1e6):
    """Split the dynamics into the underactuated and fully actuated parts.

    ``tau`` enters ``h_u`` and ``fz_bar`` enters ``g_u``; the fully actuated
    terms do not depend on either. Gravity sits in the ``p~_3`` row of ``h_f``.

    Raises
    ------
    DegenerateGf
        If ``cond(g_f) > cond_max`` or roll/pitch are outside the admissible range.
    """
    limit = 0.5 * math.pi - margin
    if abs(state.phi[0]) > limit or abs(state.phi[1]) > limit:
        raise DegenerateGf(f"roll/pitch {state.phi[:2]} outside +-(pi/2 - {margin})")
    tau = np.zeros(3) if tau is None else np.asarray(tau, float)
    fz_bar = params.m * params.g if fz_bar is None else float(fz_bar)
    h_u = float(h_p[1] + g_p[1] @ tau)
    g_u = -fz_bar / params.m
    h_f = np.array([h_p[0], h_p[2] - params.g, *h_phi])
    s2, c2 = math.sin(state.phi[1]), math.cos(state.phi[1])
    g_f = np.zeros((5, 5))
    g_f[0:2, 0:2] = np.array([[c2, s2], [-s2, c2]]) / params.m
    g_f[0:2, 2:5] = g_p[[0, 2]]
    g_f[2:5, 2:5] = g_phi
    cond = np.linalg.cond(g_f)
    if not cond <= cond_max:
        raise DegenerateGf(f"cond(g_f) = {cond:.3g} exceeds {cond_max:.3g}")
    return Decomposition(h_u, g_u, h_f, g_f)


# --------------------------------------------------------------------------
# Control law
# --------------------------------------------------------------------------


def _lowpass(prev, raw, alpha):
    return prev + alpha * (raw - prev)


def _clip(x, limit):
    return np.clip(x, -limit, limit)


def control_step(state, ref, cstate, gains, params, dt, config=ControllerConfig()):
    """One cycle of the cascade controller.

    The underactuated loop runs first and produces the desired roll. Its
    ``h_u`` uses the torque of the previous cycle. Its ``g_u`` needs
    ``f_z_bar``, which the position rows of the fully actuated law fix
    independently of the roll reference; those two rows are solved first
    with the previous torque.
    """
    if config.enforce_gains:
        report = validate_gains(gains)
        if not report.accepted:
            raise GainRejection(report.violations)

    margin = config.margin
    phi_dot = euler_rates(state, margin)
    h_phi, g_phi = rotational_terms(state, params, margin)
    h_p, g_p = translational_terms(state, h_phi, g_phi, margin)
    dec = decompose(state, h_p, g_p, h_phi, g_phi, params, tau=cstate.prev_tau,
                    margin=margin, cond_max=config.cond_max)
    ts = transform_state(state, margin)
    tr = transform_reference(ref)

    # position rows of the fully actuated law -> f_z_bar estimate for g_u
    K_fp, K_fd, K_fi = gains.K_fp[:2, :2], gains.K_fd[:2, :2], gains.K_fi[:2, :2]
    e_pos = np.array([ts.p_tilde[0] - tr.p_tilde[0], ts.p_tilde[2] - tr.p_tilde[2]])
    e_pos_dot = np.array([ts.p_tilde_dot[0] - tr.p_tilde_dot[0],
                          ts.p_tilde_dot[2] - tr.p_tilde_dot[2]])
    v_pos = (np.array([tr.p_tilde_ddot[0], tr.p_tilde_ddot[2]]) - dec.h_f[:2] - K_fp @ e_pos
             - K_fd @ e_pos_dot - K_fi @ cstate.integral_f[:2])
    force = np.linalg.solve(dec.g_f[:2, :2], v_pos - dec.g_f[:2, 2:] @ cstate.prev_tau)
    fz_bar_est = float(force[1])
    if not fz_bar_est > 0.0:
        raise DegenerateGf(f"estimated f_z_bar = {fz_bar_est:.4g} N is not positive")
    g_u = -fz_bar_est / params.m

    # underactuated axis -> desired roll
    e_u = ts.p_tilde[1] - tr.p_tilde[1]
    e_u_dot = ts.p_tilde_dot[1] - tr.p_tilde_dot[1]
    u_u = (tr.p_tilde_ddot[1] - dec.h_u - gains.K_up * e_u - gains.K_ud * e_u_dot
           - gains.K_ui * cstate.integral_u) / g_u
    roll_limit = 0.5 * math.pi - margin
    phi1_d = min(roll_limit, max(-roll_limit, math.atan(u_u)))

    if cstate.phi1d_prev is None:
        phi1d_dot = phi1d_ddot = 0.0
    else:
        alpha = dt * config.derivative_cutoff / (1.0 + dt * config.derivative_cutoff)
        phi1d_dot = _lowpass(cstate.phi1d_dot_prev, (phi1_d - cstate.phi1d_prev) / dt, alpha)
        phi1d_ddot = _lowpass(cstate.phi1d_ddot_prev,
                              (phi1d_dot - cstate.phi1d_dot_prev) / dt, alpha)

    # fully actuated axes
    pitch_d, yaw_d = ref.pitch, ref.yaw
    q_f = np.array([ts.p_tilde[0], ts.p_tilde[2], *state.phi])
    q_f_dot = np.array([ts.p_tilde_dot[0], ts.p_tilde_dot[2], *phi_dot])
    q_fd = np.array([tr.p_tilde[0], tr.p_tilde[2], phi1_d, pitch_d[0], yaw_d[0]])
    q_fd_dot = np.array([tr.p_tilde_dot[0], tr.p_tilde_dot[2], phi1d_dot, pitch_d[1], yaw_d[1]])
    q_fd_ddot = np.array([tr.p_tilde_ddot[0], tr.p_tilde_ddot[2], phi1d_ddot, pitch_d[2], yaw_d[2]])
    e_f = q_f - q_fd
    e_f[4] = wrap_angle(e_f[4])
    e_f_dot = q_f_dot - q_fd_dot
    v_f = (q_fd_ddot - dec.h_f - gains.K_fp @ e_f - gains.K_fd @ e_f_dot
           - gains.K_fi @ cstate.integral_f)
    u_f = np.linalg.solve(dec.g_f, v_f)

    f_x, fz_bar, tau = u_f[0], u_f[1], u_f[2:5]
    wrench = VirtualWrench(f_x, fz_bar / math.cos(state.phi[0]), tau)

    limit = config.integral_limit
    new_state = replace(
        cstate,
        integral_u=float(_clip(cstate.integral_u + e_u * dt, limit)),
        integral_f=_clip(cstate.integral_f + e_f * dt, limit),
        prev_tau=np.array(tau),
        phi1d_prev=phi1_d,
        phi1d_dot_prev=phi1d_dot,
        phi1d_ddot_prev=phi1d_ddot,
    )
    return ControlOutput(wrench, phi1_d, new_state, float(e_u), e_f, float(u_u), u_f, tr.p_tilde)
