"""Closed-form control allocation: virtual wrench -> (tilt, rotor thrusts)."""

import math

import numpy as np

from .errors import NegativeThrust, TiltSingularity
from .so3 import GIMBAL_MARGIN
from .vehicle import ActuatorCommand

FZ_MIN = 0.5  # N


def d_matrix(eta_d, params, margin=GIMBAL_MARGIN):
    """Inverse of the reduced mixer ``F -> [|f|, tau]`` at tilt ``eta_d``.

    Raises
    ------
    TiltSingularity
        If ``|eta_d| >= pi/2 - margin``; the pitch-torque column blows up as
        ``1 / cos(eta_d)``.
    """
    if not abs(eta_d) < 0.5 * math.pi - margin:
        raise TiltSingularity(f"|eta_d| = {abs(eta_d):.6f} rad is within {margin} of pi/2")
    s, c = math.sin(eta_d), math.cos(eta_d)
    kf, Lh, Lv = 1.0 / params.k_f, 1.0 / params.L_h, 1.0 / params.L_v
    lc = Lv / c
    return 0.25 * np.array(
        [
            [1.0, -kf * s - Lh * c, -lc, -kf * c + Lh * s],
            [1.0, kf * s + Lh * c, -lc, kf * c - Lh * s],
            [1.0, -kf * s + Lh * c, lc, -kf * c - Lh * s],
            [1.0, kf * s - Lh * c, lc, kf * c + Lh * s],
        ]
    )


def reduced_mixer(eta, params):
    """Map ``F -> [sum(F), tau]`` at a fixed tilt (rows 3-5 of ``C`` plus a row of ones)."""
    s, c = math.sin(eta), math.cos(eta)
    Lh, Lv, kf = params.L_h, params.L_v, params.k_f
    return np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [-Lh * c - kf * s, Lh * c + kf * s, Lh * c - kf * s, -Lh * c + kf * s],
            [-Lv * c, -Lv * c, Lv * c, Lv * c],
            [Lh * s - kf * c, -Lh * s + kf * c, -Lh * s - kf * c, Lh * s + kf * c],
        ]
    )


def allocate(wrench, params, fz_min=FZ_MIN, margin=GIMBAL_MARGIN, strict=False):
    """Solve ``C(eta_d) F = [f_x, f_z, tau]`` for ``(eta_d, F)``.

    ``eta_d = atan2(f_x, f_z)`` and ``F = D(eta_d) [hypot(f_x, f_z); tau]``.
    The result is exact before saturation. Negative thrusts are returned as-is
    (the plant boundary clamps and flags them) unless ``strict`` is set, in
    which case :class:`NegativeThrust` is raised.

    Raises
    ------
    TiltSingularity
        If ``f_z <= fz_min``.
    """
    if not wrench.f_z > fz_min:
        raise TiltSingularity(f"f_z = {wrench.f_z:.6g} N is not above the floor {fz_min} N")
    eta_d = math.atan2(wrench.f_x, wrench.f_z)
    rhs = np.array([math.hypot(wrench.f_x, wrench.f_z), *wrench.tau])
    F = d_matrix(eta_d, params, margin) @ rhs
    if strict and np.any(F < 0.0):
        raise NegativeThrust(f"infeasible wrench needs thrusts {F}", F)
    return ActuatorCommand(eta_d, F)
