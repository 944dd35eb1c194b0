import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiltrotor.errors import GimbalLock
from tiltrotor.so3 import (
    E1,
    E2,
    E3,
    euler_rate_jacobian,
    euler_rate_jacobian_dot,
    euler_rate_jacobian_inv,
    euler_to_rotmat,
    hat,
    rot_x,
    rot_y,
    rot_z,
    rotmat_to_euler,
    sincos,
    vee,
    wrap_angle,
)

angles = st.floats(-1.4, 1.4, allow_nan=False)
vectors = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3)


def test_single_axis_rotations():
    np.testing.assert_allclose(rot_z(math.pi / 2) @ E1, E2, atol=1e-15)
    np.testing.assert_array_equal(rot_x(0.0), np.eye(3))
    np.testing.assert_allclose(rot_y(math.pi) @ E1, -E1, atol=1e-15)


def test_quarter_turns_are_exact():
    assert sincos(math.pi / 2) == (1.0, 0.0)
    assert sincos(-math.pi / 2) == (-1.0, 0.0)
    assert sincos(math.pi) == (0.0, -1.0)
    assert sincos(0.3) == (math.sin(0.3), math.cos(0.3))


def test_hat_examples():
    np.testing.assert_array_equal(hat(E3) @ E1, E2)
    np.testing.assert_array_equal(hat(np.zeros(3)), np.zeros((3, 3)))
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(hat(v) + hat(v).T, np.zeros((3, 3)))
    np.testing.assert_array_equal(vee(hat(v)), v)


@given(vectors, vectors, st.floats(-5, 5), st.floats(-5, 5))
def test_hat_is_cross_product_and_linear(u, v, a, b):
    u, v = np.array(u), np.array(v)
    np.testing.assert_allclose(hat(u) @ v, np.cross(u, v), atol=1e-12)
    np.testing.assert_allclose(hat(a * u + b * v), a * hat(u) + b * hat(v), atol=1e-12)


def test_euler_to_rotmat_reductions():
    np.testing.assert_array_equal(euler_to_rotmat((0.0, 0.0, 0.0)), np.eye(3))
    np.testing.assert_array_equal(euler_to_rotmat((0.0, 0.0, math.pi / 2)), rot_z(math.pi / 2))
    phi = (0.3, -0.2, 1.1)
    np.testing.assert_allclose(euler_to_rotmat(phi),
                               rot_z(phi[2]) @ rot_y(phi[1]) @ rot_x(phi[0]), atol=1e-15)


@given(st.floats(-math.pi, math.pi), st.floats(-1.55, 1.55), st.floats(-math.pi, math.pi))
def test_rotmat_in_so3(a, b, c):
    R = euler_to_rotmat((a, b, c))
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(R) - 1.0) < 1e-12


def test_round_trip_1000_random(rng):
    for phi in rng.uniform(-1.4, 1.4, size=(1000, 3)):
        np.testing.assert_allclose(rotmat_to_euler(euler_to_rotmat(phi)), phi, atol=1e-10)


def test_rotmat_to_euler_gimbal_branch_prefers_zero_roll():
    R = euler_to_rotmat((0.0, math.pi / 2, 0.4))
    phi = rotmat_to_euler(R)
    assert phi[0] == 0.0
    assert phi[1] == pytest.approx(math.pi / 2)
    np.testing.assert_allclose(euler_to_rotmat(phi), R, atol=1e-12)


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    for x in np.linspace(-20, 20, 101):
        w = wrap_angle(x)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-12)


def test_euler_rate_jacobian_identity_and_det(rng):
    np.testing.assert_array_equal(euler_rate_jacobian((0.0, 0.0, 0.0)), np.eye(3))
    for phi in rng.uniform(-1.4, 1.4, size=(200, 3)):
        Q = euler_rate_jacobian(phi)
        assert np.linalg.det(Q) == pytest.approx(math.cos(phi[1]), abs=1e-12)
        np.testing.assert_allclose(euler_rate_jacobian_inv(phi) @ Q, np.eye(3), atol=1e-12)


def test_gimbal_lock_guard():
    with pytest.raises(GimbalLock):
        euler_rate_jacobian((0.0, math.pi / 2 - 0.01, 0.0))
    euler_rate_jacobian((0.0, math.pi / 2 - 0.03, 0.0))
    with pytest.raises(GimbalLock):
        euler_rate_jacobian((0.0, -1.56, 0.0), margin=0.02)


def _trajectory(t):
    return np.array([0.4 * math.sin(1.3 * t), 0.6 * math.cos(0.7 * t), 1.1 * t])


def _trajectory_rate(t):
    return np.array([0.52 * math.cos(1.3 * t), -0.42 * math.sin(0.7 * t), 1.1])


def test_body_rate_matches_rotation_finite_difference():
    """hat(Q phidot) equals R^T Rdot (body-frame angular velocity)."""
    dt = 1e-5
    for t in np.linspace(0.0, 3.0, 13):
        R = euler_to_rotmat(_trajectory(t))
        Rdot = (euler_to_rotmat(_trajectory(t + dt)) - euler_to_rotmat(_trajectory(t - dt))) / (2 * dt)
        omega_fd = vee(R.T @ Rdot)
        omega = euler_rate_jacobian(_trajectory(t)) @ _trajectory_rate(t)
        np.testing.assert_allclose(omega, omega_fd, atol=1e-6)
        # the world-frame product Rdot R^T carries the same rate rotated by R
        np.testing.assert_allclose(vee(Rdot @ R.T), R @ omega, atol=1e-6)


def test_jacobian_derivative_matches_finite_difference():
    dt = 1e-6
    for t in (0.0, 0.8, 2.1):
        fd = (euler_rate_jacobian(_trajectory(t + dt)) - euler_rate_jacobian(_trajectory(t - dt))) / (2 * dt)
        np.testing.assert_allclose(euler_rate_jacobian_dot(_trajectory(t), _trajectory_rate(t)), fd,
                                   atol=1e-8)
