"""Rotation and ZYX Euler-angle kinematics.

Conventions
-----------
* ``R = Rz(phi3) @ Ry(phi2) @ Rx(phi1)`` maps body vectors to world vectors.
* ``phi = (phi1, phi2, phi3)`` is (roll, pitch, yaw).
* Angular velocity ``omega`` is expressed in the body frame, so that
  ``hat(omega) = R.T @ Rdot`` and ``omega = Q(phi) @ phidot`` with::

      Q = [[1,    0,        -s2],
           [0,   c1,     s1*c2],
           [0,  -s1,     c1*c2]]

  ``det Q = cos(phi2)``.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import GimbalLock

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

GIMBAL_MARGIN = 0.02  # rad

_HALF_PI = 0.5 * math.pi
_QUARTER_TURNS = ((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0))


class EulerZYX(NamedTuple):
    phi1: float  # roll
    phi2: float  # pitch
    phi3: float  # yaw


def sincos(theta):
    """Return ``(sin, cos)`` of ``theta`` with exact values at quarter turns.

    Arguments that are within a few ulps of an integer multiple of pi/2 are
    treated as that multiple, so ``sincos(pi/2) == (1.0, 0.0)`` instead of
    ``(1.0, 6.1e-17)``. Everywhere else this is plain ``math.sin/cos``.
    """
    theta = float(theta)
    k = round(theta / _HALF_PI)
    if abs(theta - k * _HALF_PI) <= 4.0 * np.finfo(float).eps * max(1.0, abs(theta)):
        return _QUARTER_TURNS[k % 4]
    return math.sin(theta), math.cos(theta)


def wrap_angle(theta):
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(float(theta), 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


def rot_x(theta):
    s, c = sincos(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(theta):
    s, c = sincos(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(theta):
    s, c = sincos(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def hat(v):
    """Skew-symmetric matrix such that ``hat(v) @ w == cross(v, w)``."""
    x, y, z = (float(a) for a in v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m):
    """Inverse of :func:`hat` (uses the antisymmetric part of ``m``)."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def euler_to_rotmat(phi):
    """Body-to-world rotation ``Rz(phi3) Ry(phi2) Rx(phi1)``."""
    s1, c1 = sincos(phi[0])
    s2, c2 = sincos(phi[1])
    s3, c3 = sincos(phi[2])
    return np.array(
        [
            [c3 * c2, c3 * s2 * s1 - s3 * c1, c3 * s2 * c1 + s3 * s1],
            [s3 * c2, s3 * s2 * s1 + c3 * c1, s3 * s2 * c1 - c3 * s1],
            [-s2, c2 * s1, c2 * c1],
        ]
    )


def rotmat_to_euler(R):
    """Recover ZYX Euler angles from a rotation matrix.

    At gimbal lock (``|R[2, 0]| == 1``) roll is set to zero and the whole
    rotation about the vertical is attributed to yaw.
    """
    R = np.asarray(R, dtype=float)
    s2 = min(1.0, max(-1.0, -R[2, 0]))
    phi2 = math.asin(s2)
    if abs(s2) < 1.0 - 1e-12:
        phi1 = math.atan2(R[2, 1], R[2, 2])
        phi3 = math.atan2(R[1, 0], R[0, 0])
    else:
        phi1 = 0.0
        phi3 = math.atan2(-R[0, 1], R[1, 1])
    return EulerZYX(phi1, phi2, wrap_angle(phi3))


def _check_pitch(phi2, margin):
    if abs(phi2) > _HALF_PI - margin:
        raise GimbalLock(f"|pitch| = {abs(phi2):.6f} rad exceeds pi/2 - {margin}")


def euler_rate_jacobian(phi, margin=GIMBAL_MARGIN):
    """Jacobian ``Q`` with ``omega_body = Q @ phidot``."""
    _check_pitch(phi[1], margin)
    s1, c1 = sincos(phi[0])
    s2, c2 = sincos(phi[1])
    return np.array([[1.0, 0.0, -s2], [0.0, c1, s1 * c2], [0.0, -s1, c1 * c2]])


def euler_rate_jacobian_inv(phi, margin=GIMBAL_MARGIN):
    """Closed-form ``Q^-1`` so that ``phidot = Q^-1 @ omega_body``."""
    _check_pitch(phi[1], margin)
    s1, c1 = sincos(phi[0])
    s2, c2 = sincos(phi[1])
    t2 = s2 / c2
    return np.array(
        [[1.0, s1 * t2, c1 * t2], [0.0, c1, -s1], [0.0, s1 / c2, c1 / c2]]
    )


def euler_rate_jacobian_dot(phi, phi_dot):
    """Time derivative of ``Q`` along ``phi_dot``."""
    s1, c1 = sincos(phi[0])
    s2, c2 = sincos(phi[1])
    d1, d2 = float(phi_dot[0]), float(phi_dot[1])
    return np.array(
        [
            [0.0, 0.0, -c2 * d2],
            [0.0, -s1 * d1, c1 * c2 * d1 - s1 * s2 * d2],
            [0.0, -c1 * d1, -s1 * c2 * d1 - c1 * s2 * d2],
        ]
    )
